#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "ridi/cascade.hpp"
#include "ridi/crc32.hpp"
#include "ridi/errors.hpp"
#include "ridi/model_io.hpp"

using namespace ridi;
using namespace ridi::testing;

namespace {

/// Hand-built model with full feature dimension; one RBF regressor so both
/// serialization paths are exercised.
CascadeModel toy_model() {
  CascadeModel m;
  m.grid_seed = 42;
  m.norm.mean = Eigen::VectorXd::Random(kFeatureDim);
  m.norm.std = (Eigen::VectorXd::Random(kFeatureDim).array().abs() + 0.5).matrix();
  for (int k = 0; k < 4; ++k) {
    m.classifier.ovr[k].w = Eigen::VectorXd::Random(kFeatureDim) * 0.1;
    m.classifier.ovr[k].b = 0.01 * k;
  }
  for (int p = 0; p < 4; ++p) {
    for (int a = 0; a < 2; ++a) {
      SvrModel& s = m.regressors[p][a];
      s.kernel = Kernel::Linear;
      s.hp.c = 10.0;
      s.hp.epsilon = 0.01 * (p + 1);
      s.linear.w = Eigen::VectorXd::Random(kFeatureDim) * 0.05;
      s.linear.b = 0.1 * p - 0.05 * a;
    }
  }
  // Swap one regressor for an RBF model.
  SvrModel& r = m.regressors[2][1];
  r.kernel = Kernel::Rbf;
  r.rbf.gamma = 1.0 / kFeatureDim;
  r.rbf.support = SampleMatrix::Random(5, kFeatureDim);
  r.rbf.coef = Eigen::VectorXd::Random(5);
  r.rbf.b = 0.25;
  return m;
}

std::vector<char> slurp_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::vector<char>((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
}

void spit_bytes(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  REQUIRE(out.good());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

constexpr std::size_t kHeaderLen = 10 + 4 + 8;  // magic, version, payload length

}  // namespace

TEST_CASE("crc32 matches the zip/zlib check value") {
  const char* s = "123456789";
  CHECK(crc32(s, 9) == 0xCBF43926u);
  CHECK(crc32(s, 0) == 0u);
  // Seeding with a previous CRC continues the stream.
  std::uint32_t first = crc32(s, 4);
  CHECK(crc32(s + 4, 5, first) == 0xCBF43926u);
}

TEST_CASE("save then load predicts bitwise identically") {
  const std::string dir = tmp_dir("model_roundtrip");
  const std::string path = dir + "/m.ridi";

  CascadeModel m = toy_model();
  save_model(m, path);
  CascadeModel back = load_model(path);

  CHECK(back.grid_seed == m.grid_seed);
  CHECK(back.regressors[1][0].hp.epsilon == m.regressors[1][0].hp.epsilon);
  CHECK(back.regressors[2][1].kernel == Kernel::Rbf);

  for (int k = 0; k < 100; ++k) {
    FeatureVector f = Eigen::VectorXd::Random(kFeatureDim);
    CascadeModel::Prediction a = m.predict(f);
    CascadeModel::Prediction b = back.predict(f);
    CHECK(a.placement == b.placement);
    CHECK(a.velocity.x() == b.velocity.x());
    CHECK(a.velocity.y() == b.velocity.y());
  }

  // Second save of the loaded model is byte identical.
  const std::string path2 = dir + "/m2.ridi";
  save_model(back, path2);
  CHECK(slurp_bytes(path) == slurp_bytes(path2));
}

TEST_CASE("truncated files are parse errors at any cut point") {
  const std::string dir = tmp_dir("model_trunc");
  const std::string path = dir + "/m.ridi";
  save_model(toy_model(), path);
  std::vector<char> bytes = slurp_bytes(path);

  for (std::size_t cut : {std::size_t(0), std::size_t(5), kHeaderLen - 1,
                          kHeaderLen + 100, bytes.size() - 1}) {
    std::vector<char> shorter(bytes.begin(), bytes.begin() + cut);
    const std::string p = dir + "/cut.ridi";
    spit_bytes(p, shorter);
    CHECK_THROWS_AS(load_model(p), ParseError);
  }
}

TEST_CASE("bad magic is a parse error") {
  const std::string dir = tmp_dir("model_magic");
  const std::string path = dir + "/m.ridi";
  save_model(toy_model(), path);
  std::vector<char> bytes = slurp_bytes(path);
  bytes[0] = 'X';
  spit_bytes(path, bytes);
  try {
    load_model(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("magic") != std::string::npos);
  }
}

TEST_CASE("future format version is a schema error naming both versions") {
  const std::string dir = tmp_dir("model_version");
  const std::string path = dir + "/m.ridi";
  save_model(toy_model(), path);
  std::vector<char> bytes = slurp_bytes(path);
  std::uint32_t v = 7;
  std::memcpy(bytes.data() + 10, &v, 4);
  spit_bytes(path, bytes);
  try {
    load_model(path);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    std::string msg = e.what();
    CHECK(msg.find("7") != std::string::npos);
    CHECK(msg.find(std::to_string(CascadeModel::kFormatVersion)) != std::string::npos);
  }
}

TEST_CASE("payload corruption fails the checksum") {
  const std::string dir = tmp_dir("model_crc");
  const std::string path = dir + "/m.ridi";
  save_model(toy_model(), path);
  std::vector<char> bytes = slurp_bytes(path);
  bytes[kHeaderLen + 2000] ^= 0x40;
  spit_bytes(path, bytes);
  try {
    load_model(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("checksum") != std::string::npos);
  }
}

TEST_CASE("foreign feature dimension is a schema error") {
  const std::string dir = tmp_dir("model_dim");
  const std::string path = dir + "/m.ridi";
  save_model(toy_model(), path);
  std::vector<char> bytes = slurp_bytes(path);

  // Patch the payload's leading feature-dimension field and refresh the CRC.
  std::uint32_t dim = 10;
  std::memcpy(bytes.data() + kHeaderLen, &dim, 4);
  std::uint64_t len;
  std::memcpy(&len, bytes.data() + 10 + 4, 8);
  std::uint32_t crc = crc32(bytes.data() + kHeaderLen, len);
  std::memcpy(bytes.data() + kHeaderLen + len, &crc, 4);
  spit_bytes(path, bytes);

  CHECK_THROWS_AS(load_model(path), SchemaError);
}

TEST_CASE("missing model file is a parse error") {
  CHECK_THROWS_AS(load_model("/nonexistent/m.ridi"), ParseError);
}

TEST_CASE("a freshly trained model survives the round trip") {
  const CascadeModel& m = shared_model();
  const std::string dir = tmp_dir("model_trained");
  const std::string path = dir + "/trained.ridi";
  save_model(m, path);
  CascadeModel back = load_model(path);

  for (int k = 0; k < 20; ++k) {
    FeatureVector f = Eigen::VectorXd::Random(kFeatureDim) * 0.3;
    CascadeModel::Prediction a = m.predict(f);
    CascadeModel::Prediction b = back.predict(f);
    CHECK(a.placement == b.placement);
    CHECK(a.velocity.x() == b.velocity.x());
    CHECK(a.velocity.y() == b.velocity.y());
  }
}
