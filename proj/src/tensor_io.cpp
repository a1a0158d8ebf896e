#include "melidar/tensor_io.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <sstream>

namespace melidar {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'M', 'E', 'L', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::vector<std::byte>& out, T v) {
    const auto* p = reinterpret_cast<const std::byte*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
public:
    explicit Reader(std::span<const std::byte> buf) : buf_(buf) {}

    template <typename T>
    T get(const char* what) {
        need(sizeof(T), what);
        T v;
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::span<const std::byte> take(std::size_t n, const char* what) {
        need(n, what);
        auto s = buf_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    [[nodiscard]] std::size_t remaining() const { return buf_.size() - pos_; }

private:
    void need(std::size_t n, const char* what) const {
        if (buf_.size() - pos_ < n) {
            throw TruncationError(std::string("container truncated while reading ") + what + ": need " +
                                  std::to_string(n) + " bytes, have " + std::to_string(buf_.size() - pos_));
        }
    }

    std::span<const std::byte> buf_;
    std::size_t pos_ = 0;
};

}  // namespace

std::size_t dtype_size(DType t) {
    switch (t) {
        case DType::F32: return 4;
        case DType::U32: return 4;
        case DType::U8: return 1;
    }
    throw UnsupportedDtype("unknown dtype code " + std::to_string(static_cast<std::uint32_t>(t)));
}

std::string dtype_name(DType t) {
    switch (t) {
        case DType::F32: return "f32";
        case DType::U32: return "u32";
        case DType::U8: return "u8";
    }
    return "unknown";
}

Tensor::Tensor(std::vector<std::uint64_t> dims, DType dtype) : dims_(std::move(dims)), dtype_(dtype) {
    bytes_.assign(numel() * dtype_size(dtype_), std::byte{0});
}

std::size_t Tensor::numel() const {
    std::size_t n = 1;
    for (auto d : dims_) n *= static_cast<std::size_t>(d);
    return n;
}

void Tensor::check_type(DType t) const {
    if (t != dtype_) {
        throw UnsupportedDtype("tensor holds " + dtype_name(dtype_) + ", requested " + dtype_name(t));
    }
}

std::vector<std::byte> encode_tensor(const Tensor& t) {
    std::vector<std::byte> out;
    const std::string meta = t.meta.dump();
    out.reserve(32 + 8 * t.ndim() + meta.size() + t.bytes().size());
    for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
    put<std::uint32_t>(out, kVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.ndim()));
    for (auto d : t.dims()) put<std::uint64_t>(out, d);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dtype()));
    put<std::uint64_t>(out, meta.size());
    const auto* mp = reinterpret_cast<const std::byte*>(meta.data());
    out.insert(out.end(), mp, mp + meta.size());
    out.insert(out.end(), t.bytes().begin(), t.bytes().end());
    return out;
}

Tensor decode_tensor(std::span<const std::byte> buf) {
    if (buf.size() < 4) throw FormatError("file too short for MELT magic");
    if (std::memcmp(buf.data(), kMagic, 4) != 0) throw FormatError("bad magic, not a MELT container");
    Reader rd(buf.subspan(4));
    const auto version = rd.get<std::uint32_t>("version");
    if (version != kVersion) throw FormatError("unsupported container version " + std::to_string(version));
    const auto ndim = rd.get<std::uint32_t>("ndim");
    std::vector<std::uint64_t> dims(ndim);
    for (auto& d : dims) d = rd.get<std::uint64_t>("dims");
    const auto code = rd.get<std::uint32_t>("dtype");
    if (code < 1 || code > 3) throw UnsupportedDtype("unknown dtype code " + std::to_string(code));
    const auto dtype = static_cast<DType>(code);
    const auto meta_len = rd.get<std::uint64_t>("meta_len");
    const auto meta_bytes = rd.take(static_cast<std::size_t>(meta_len), "meta");

    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(reinterpret_cast<const char*>(meta_bytes.data()),
                                     reinterpret_cast<const char*>(meta_bytes.data()) + meta_bytes.size());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("meta is not valid JSON: ") + e.what());
    }

    long double expected = dtype_size(dtype);
    for (auto d : dims) expected *= static_cast<long double>(d);
    if (expected > static_cast<long double>(rd.remaining())) {
        throw TruncationError("payload truncated: expected " + std::to_string(static_cast<unsigned long long>(expected)) +
                              " bytes, found " + std::to_string(rd.remaining()));
    }
    Tensor t(std::move(dims), dtype);
    const auto payload = rd.take(t.bytes().size(), "payload");
    std::memcpy(t.bytes().data(), payload.data(), payload.size());
    if (rd.remaining() != 0) throw FormatError("trailing bytes after payload");
    t.meta = std::move(meta);
    return t;
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
    const auto buf = encode_tensor(t);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw IoError("write failed for " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::vector<char> raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_tensor(std::as_bytes(std::span<const char>(raw)));
}

// ---------------------------------------------------------------------------

namespace {

double number_field(const nlohmann::json& rec, const char* key, std::size_t line) {
    auto it = rec.find(key);
    if (it == rec.end()) throw ParseError(line, std::string("missing field '") + key + "'");
    if (!it->is_number()) throw ParseError(line, std::string("field '") + key + "' is not a number");
    const double v = it->get<double>();
    if (!std::isfinite(v)) throw ParseError(line, std::string("field '") + key + "' is not finite");
    return v;
}

}  // namespace

std::vector<OrientedBox3D> parse_labels(const std::string& text) {
    std::vector<OrientedBox3D> boxes;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(lineno, std::string("invalid JSON: ") + e.what());
        }
        if (!rec.is_object()) throw ParseError(lineno, "record is not an object");
        auto cls = rec.find("class");
        if (cls == rec.end() || !cls->is_string()) throw ParseError(lineno, "missing field 'class'");
        const auto id = class_from_name(cls->get<std::string>());
        if (!id) throw ParseError(lineno, "unknown class '" + cls->get<std::string>() + "'");

        OrientedBox3D b;
        b.class_id = *id;
        b.center = {number_field(rec, "cx", lineno), number_field(rec, "cy", lineno), number_field(rec, "cz", lineno)};
        b.h = number_field(rec, "h", lineno);
        b.w = number_field(rec, "w", lineno);
        b.l = number_field(rec, "l", lineno);
        b.yaw = number_field(rec, "yaw", lineno);
        if (!(b.h > 0.0 && b.w > 0.0 && b.l > 0.0)) throw ParseError(lineno, "box dimensions must be positive");
        if (b.yaw < -kPi || b.yaw >= kPi) b.yaw = normalize_angle(b.yaw);
        if (rec.contains("score")) b.score = number_field(rec, "score", lineno);
        if (rec.contains("bbox_height")) b.bbox_height_px = number_field(rec, "bbox_height", lineno);
        if (rec.contains("occlusion")) b.occlusion = static_cast<int>(number_field(rec, "occlusion", lineno));
        if (rec.contains("truncation")) b.truncation = number_field(rec, "truncation", lineno);
        boxes.push_back(b);
    }
    return boxes;
}

std::string format_labels(std::span<const OrientedBox3D> boxes) {
    std::string out;
    for (const auto& b : boxes) {
        // ordered_json keeps a stable, human-friendly key order
        nlohmann::ordered_json rec;
        rec["class"] = class_name(b.class_id);
        rec["cx"] = b.center.x;
        rec["cy"] = b.center.y;
        rec["cz"] = b.center.z;
        rec["h"] = b.h;
        rec["w"] = b.w;
        rec["l"] = b.l;
        rec["yaw"] = b.yaw;
        if (b.score) rec["score"] = *b.score;
        if (b.bbox_height_px) rec["bbox_height"] = *b.bbox_height_px;
        if (b.occlusion) rec["occlusion"] = *b.occlusion;
        if (b.truncation) rec["truncation"] = *b.truncation;
        out += rec.dump();
        out += '\n';
    }
    return out;
}

std::vector<OrientedBox3D> read_labels(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_labels(ss.str());
}

void write_labels(const std::filesystem::path& path, std::span<const OrientedBox3D> boxes) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << format_labels(boxes);
    if (!f) throw IoError("write failed for " + path.string());
}

}  // namespace melidar
