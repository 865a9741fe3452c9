#include "ridi/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "ridi/crc32.hpp"
#include "ridi/errors.hpp"

// The container commits to little-endian scalars; byte-swapping writers are
// not implemented.
static_assert(std::endian::native == std::endian::little);

namespace ridi {

namespace {

constexpr char kMagic[10] = {'R', 'I', 'D', 'I', '-', 'M', 'O', 'D', 'E', 'L'};

class PayloadWriter {
 public:
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void vec(const Eigen::VectorXd& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    raw(v.data(), static_cast<std::size_t>(v.size()) * 8);
  }
  void mat(const SampleMatrix& m) {
    u32(static_cast<std::uint32_t>(m.rows()));
    u32(static_cast<std::uint32_t>(m.cols()));
    raw(m.data(), static_cast<std::size_t>(m.size()) * 8);  // row-major storage
  }

  const std::vector<char>& bytes() const { return buf_; }

 private:
  void raw(const void* p, std::size_t n) {
    const char* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  std::vector<char> buf_;
};

class PayloadReader {
 public:
  PayloadReader(const char* data, std::size_t len) : p_(data), end_(data + len) {}

  std::uint8_t u8() { return get<std::uint8_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  double f64() { return get<double>(); }
  Eigen::VectorXd vec() {
    const std::uint32_t n = u32();
    Eigen::VectorXd v(n);
    raw(v.data(), static_cast<std::size_t>(n) * 8);
    return v;
  }
  SampleMatrix mat() {
    const std::uint32_t r = u32();
    const std::uint32_t c = u32();
    SampleMatrix m(r, c);
    raw(m.data(), static_cast<std::size_t>(r) * c * 8);
    return m;
  }
  bool exhausted() const { return p_ == end_; }

 private:
  template <typename T>
  T get() {
    T v;
    raw(&v, sizeof(T));
    return v;
  }
  void raw(void* out, std::size_t n) {
    if (static_cast<std::size_t>(end_ - p_) < n) throw ParseError("model payload truncated");
    std::memcpy(out, p_, n);
    p_ += n;
  }
  const char* p_;
  const char* end_;
};

void write_linear(PayloadWriter& w, const LinearModel& m) {
  w.vec(m.w);
  w.f64(m.b);
}

LinearModel read_linear(PayloadReader& r) {
  LinearModel m;
  m.w = r.vec();
  m.b = r.f64();
  return m;
}

}  // namespace

void save_model(const CascadeModel& model, const std::string& path) {
  PayloadWriter w;
  w.u32(kFeatureDim);
  w.u64(model.grid_seed);
  w.vec(model.norm.mean);
  w.vec(model.norm.std);
  for (const auto& clf : model.classifier.ovr) write_linear(w, clf);
  for (Placement p : kAllPlacements) {
    for (int axis = 0; axis < 2; ++axis) {
      const SvrModel& m =
          model.regressors[static_cast<std::size_t>(p)][static_cast<std::size_t>(axis)];
      w.u8(static_cast<std::uint8_t>(p));
      w.u8(static_cast<std::uint8_t>(axis));
      w.u8(static_cast<std::uint8_t>(m.kernel));
      w.f64(m.hp.c);
      w.f64(m.hp.epsilon);
      if (m.kernel == Kernel::Linear) {
        write_linear(w, m.linear);
      } else {
        w.f64(m.rbf.gamma);
        w.mat(m.rbf.support);
        w.vec(m.rbf.coef);
        w.f64(m.rbf.b);
      }
    }
  }

  const auto& payload = w.bytes();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t version = CascadeModel::kFormatVersion;
  out.write(reinterpret_cast<const char*>(&version), 4);
  const std::uint64_t len = payload.size();
  out.write(reinterpret_cast<const char*>(&len), 8);
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  const std::uint32_t crc = crc32(payload.data(), payload.size());
  out.write(reinterpret_cast<const char*>(&crc), 4);
  if (!out) throw ParseError("short write to " + path);
}

CascadeModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < sizeof(kMagic) + 4 + 8) throw ParseError(path + ": model file truncated");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw ParseError(path + ": not a model file (bad magic)");
  std::uint32_t version;
  std::memcpy(&version, bytes.data() + sizeof(kMagic), 4);
  if (version != CascadeModel::kFormatVersion)
    throw SchemaError(path + ": model format version " + std::to_string(version) +
                      " unsupported; this build reads version " +
                      std::to_string(CascadeModel::kFormatVersion));
  std::uint64_t len;
  std::memcpy(&len, bytes.data() + sizeof(kMagic) + 4, 8);
  const std::size_t header = sizeof(kMagic) + 4 + 8;
  if (bytes.size() < header + len + 4) throw ParseError(path + ": model file truncated");
  const char* payload = bytes.data() + header;
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, payload + len, 4);
  if (crc32(payload, len) != stored_crc)
    throw ParseError(path + ": payload checksum mismatch (corrupt file)");

  PayloadReader r(payload, len);
  CascadeModel model;
  const std::uint32_t dim = r.u32();
  if (dim != kFeatureDim)
    throw SchemaError(path + ": model feature dimension " + std::to_string(dim) +
                      " does not match this build's " + std::to_string(kFeatureDim));
  model.grid_seed = r.u64();
  model.norm.mean = r.vec();
  model.norm.std = r.vec();
  for (auto& clf : model.classifier.ovr) clf = read_linear(r);
  for (int block = 0; block < 8; ++block) {
    const auto p = r.u8();
    const auto axis = r.u8();
    const auto kernel = r.u8();
    if (p > 3 || axis > 1 || kernel > 1) throw ParseError(path + ": malformed regressor block");
    SvrModel m;
    m.kernel = static_cast<Kernel>(kernel);
    m.hp.c = r.f64();
    m.hp.epsilon = r.f64();
    if (m.kernel == Kernel::Linear) {
      m.linear = read_linear(r);
    } else {
      m.rbf.gamma = r.f64();
      m.rbf.support = r.mat();
      m.rbf.coef = r.vec();
      m.rbf.b = r.f64();
    }
    model.regressors[p][axis] = std::move(m);
  }
  if (!r.exhausted()) throw ParseError(path + ": trailing bytes after model payload");
  return model;
}

}  // namespace ridi
