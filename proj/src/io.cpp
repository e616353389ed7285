#include "btoep/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "btoep/errors.hpp"

namespace btoep::io {
namespace {

constexpr std::uint32_t kOperatorVersion = 1;
constexpr std::size_t kHeaderSize = 64;
constexpr char kOperatorMagic[4] = {'B', 'T', 'O', 'P'};
constexpr char kVectorMagic[4] = {'B', 'T', 'V', 'C'};

class ByteWriter {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(const char* data, std::size_t n) { bytes_.insert(bytes_.end(), data, data + n); }
    void pad_to(std::size_t size) { bytes_.resize(size, 0); }

    const std::vector<char>& bytes() const { return bytes_; }

private:
    std::vector<char> bytes_;
};

class ByteReader {
public:
    ByteReader(const char* data, std::size_t size) : data_(data), size_(size) {}

    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte()) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte()) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    void skip(std::size_t n) { pos_ += n; }
    std::size_t remaining() const { return size_ - pos_; }

private:
    unsigned char byte() {
        if (pos_ >= size_) throw FormatError("file truncated");
        return static_cast<unsigned char>(data_[pos_++]);
    }

    const char* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

void write_file(const std::filesystem::path& path, const std::vector<char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("failed writing '" + path.string() + "'");
}

std::vector<char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw FormatError("cannot open '" + path.string() + "'");
    const auto size = in.tellg();
    in.seekg(0);
    std::vector<char> bytes(static_cast<std::size_t>(size));
    in.read(bytes.data(), size);
    if (!in) throw FormatError("failed reading '" + path.string() + "'");
    return bytes;
}

void write_operator_header(ByteWriter& w, const OperatorHeader& header) {
    w.raw(kOperatorMagic, 4);
    w.u32(kOperatorVersion);
    w.u32(header.ordering == Ordering::TOSI ? 0u : 1u);
    w.u32(static_cast<std::uint32_t>(header.domain));
    w.u64(header.num_sensors);
    w.u64(header.num_sources);
    w.u64(header.num_steps);
    w.u32(header.complex_scalar ? 1u : 0u);
    w.pad_to(kHeaderSize);
}

}  // namespace

void write_operator(const std::filesystem::path& path, const CompactP2O& op) {
    op.validate();
    OperatorHeader header;
    header.ordering = Ordering::TOSI;
    header.domain = Domain::Time;
    header.num_sensors = op.num_sensors;
    header.num_sources = op.num_sources;
    header.num_steps = op.num_steps;
    header.complex_scalar = false;

    ByteWriter w;
    write_operator_header(w, header);
    for (double v : op.blocks) w.f64(v);
    write_file(path, w.bytes());
}

void write_operator(const std::filesystem::path& path, const SpectralP2O& op) {
    op.validate();
    OperatorHeader header;
    header.ordering = Ordering::TOSI;
    header.domain = Domain::Frequency;
    header.num_sensors = op.num_sensors;
    header.num_sources = op.num_sources;
    header.num_steps = op.num_steps;
    header.complex_scalar = true;

    ByteWriter w;
    write_operator_header(w, header);
    for (const std::complex<double>& v : op.freq_blocks) {
        w.f64(v.real());
        w.f64(v.imag());
    }
    write_file(path, w.bytes());
}

OperatorHeader peek_operator(const std::filesystem::path& path) {
    const std::vector<char> bytes = read_file(path);
    if (bytes.size() < kHeaderSize)
        throw FormatError("'" + path.string() + "' is too short for an operator header");
    if (std::memcmp(bytes.data(), kOperatorMagic, 4) != 0)
        throw FormatError("'" + path.string() + "' is not an operator file (bad magic)");
    ByteReader r(bytes.data() + 4, kHeaderSize - 4);
    OperatorHeader header;
    const std::uint32_t version = r.u32();
    if (version != kOperatorVersion)
        throw FormatError("'" + path.string() + "': unsupported operator format version " +
                          std::to_string(version));
    const std::uint32_t ordering = r.u32();
    if (ordering > 1) throw FormatError("'" + path.string() + "': bad ordering flag");
    header.ordering = ordering == 0 ? Ordering::TOSI : Ordering::SOTI;
    const std::uint32_t domain = r.u32();
    if (domain > 1) throw FormatError("'" + path.string() + "': bad domain flag");
    header.domain = static_cast<Domain>(domain);
    header.num_sensors = r.u64();
    header.num_sources = r.u64();
    header.num_steps = r.u64();
    const std::uint32_t scalar = r.u32();
    if (scalar > 1) throw FormatError("'" + path.string() + "': bad scalar kind");
    header.complex_scalar = scalar == 1;
    return header;
}

CompactP2O read_compact_operator(const std::filesystem::path& path) {
    const OperatorHeader header = peek_operator(path);
    if (header.domain != Domain::Time || header.complex_scalar)
        throw FormatError("'" + path.string() + "' holds a frequency-domain operator; a "
                          "time-domain compact operator was expected");
    if (header.ordering != Ordering::TOSI)
        throw FormatError("'" + path.string() + "': compact operators must be TOSI-ordered");

    const std::vector<char> bytes = read_file(path);
    CompactP2O op = CompactP2O::zeros(header.num_sensors, header.num_sources, header.num_steps);
    const std::size_t expected = op.blocks.size() * 8;
    if (bytes.size() != kHeaderSize + expected)
        throw FormatError("'" + path.string() + "': payload has " +
                          std::to_string(bytes.size() - kHeaderSize) + " bytes, expected " +
                          std::to_string(expected));
    ByteReader r(bytes.data() + kHeaderSize, bytes.size() - kHeaderSize);
    for (double& v : op.blocks) v = r.f64();
    return op;
}

SpectralP2O read_spectral_operator(const std::filesystem::path& path) {
    const OperatorHeader header = peek_operator(path);
    if (header.domain != Domain::Frequency || !header.complex_scalar)
        throw FormatError("'" + path.string() + "' holds a time-domain operator; a "
                          "frequency-domain operator was expected");
    if (header.ordering != Ordering::TOSI)
        throw FormatError("'" + path.string() + "': spectral operators must be TOSI-ordered");

    const std::vector<char> bytes = read_file(path);
    SpectralP2O op;
    op.num_sensors = header.num_sensors;
    op.num_sources = header.num_sources;
    op.num_steps = header.num_steps;
    op.freq_blocks.resize(op.num_freq() * op.block_size());
    const std::size_t expected = op.freq_blocks.size() * 16;
    if (bytes.size() != kHeaderSize + expected)
        throw FormatError("'" + path.string() + "': payload has " +
                          std::to_string(bytes.size() - kHeaderSize) + " bytes, expected " +
                          std::to_string(expected));
    ByteReader r(bytes.data() + kHeaderSize, bytes.size() - kHeaderSize);
    for (std::complex<double>& v : op.freq_blocks) {
        const double re = r.f64();
        const double im = r.f64();
        v = {re, im};
    }
    return op;
}

void write_vector(const std::filesystem::path& path, const SpaceTimeVector& v) {
    v.validate();
    ByteWriter w;
    w.raw(kVectorMagic, 4);
    w.u32(v.ordering == Ordering::TOSI ? 0u : 1u);
    w.u64(v.spatial_dim);
    w.u64(v.num_steps);
    w.pad_to(kHeaderSize);
    for (double x : v.values) w.f64(x);
    write_file(path, w.bytes());
}

SpaceTimeVector read_vector(const std::filesystem::path& path) {
    const std::vector<char> bytes = read_file(path);
    if (bytes.size() < kHeaderSize)
        throw FormatError("'" + path.string() + "' is too short for a vector header");
    if (std::memcmp(bytes.data(), kVectorMagic, 4) != 0)
        throw FormatError("'" + path.string() + "' is not a vector file (bad magic)");
    ByteReader r(bytes.data() + 4, bytes.size() - 4);
    const std::uint32_t ordering = r.u32();
    if (ordering > 1) throw FormatError("'" + path.string() + "': bad ordering flag");
    SpaceTimeVector v;
    v.ordering = ordering == 0 ? Ordering::TOSI : Ordering::SOTI;
    v.spatial_dim = r.u64();
    v.num_steps = r.u64();
    r.skip(kHeaderSize - 24);
    const std::size_t count = v.spatial_dim * v.num_steps;
    if (r.remaining() != count * 8)
        throw FormatError("'" + path.string() + "': payload has " + std::to_string(r.remaining()) +
                          " bytes, expected " + std::to_string(count * 8));
    v.values.resize(count);
    for (double& x : v.values) x = r.f64();
    return v;
}

}  // namespace btoep::io
