#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "mdp/config.hpp"

using namespace mdp;
using nlohmann::json;

namespace {

json scalar_json() {
  return json::parse(R"({"schema": 1, "model": "scalar", "n": 2, "A": [[1,1,1],[1,1,1],[1,1,1]], "a": [1, 2, 3]})");
}

json model2_json() {
  return json::parse(R"({"schema": 1, "model": "II", "n": 1, "d": 2,
    "A": [[2, [0.5, 0.25]], [[0.5, -0.25], 2]],
    "B": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]], "a": [2, 2]})");
}

}  // namespace

TEST(ModelConfig, ScalarFile) {
  const ModelConfig c = parse_model_config(scalar_json());
  EXPECT_TRUE(c.is_scalar());
  EXPECT_EQ(c.dim(), 2);
  EXPECT_EQ(c.a(2), 3.0);
  EXPECT_EQ(c.barycenter(), RealVector::Constant(2, 1.0 / 3.0));
  EXPECT_EQ(c.coordinate_names(), (std::vector<std::string>{"x1", "x2"}));
  const DiffusionModel m = c.build();
  EXPECT_EQ(m.dim, 2);
  // gamma_simplex at the barycentre with A = 1: x_i (delta_ij - x_j).
  EXPECT_NEAR(m.gamma(c.barycenter())(0, 1), -1.0 / 9.0, 1e-15);
}

TEST(ModelConfig, ComplexEntriesAsPairs) {
  const ModelConfig c = parse_model_config(model2_json());
  EXPECT_EQ(c.A_complex(0, 1), cplx(0.5, 0.25));
  EXPECT_EQ(c.A_complex(1, 0), cplx(0.5, -0.25));
  EXPECT_EQ(c.dim(), 4);
  EXPECT_EQ(c.coordinate_names(), (std::vector<std::string>{"Z1_11", "Z1_22", "Z1_12re", "Z1_12im"}));
  const RealVector x0 = c.barycenter();
  EXPECT_EQ(x0(0), 0.5);
  EXPECT_EQ(x0(2), 0.0);
  EXPECT_TRUE(c.build().contains(x0));
}

TEST(ModelConfig, ModelOneWithoutB) {
  json j = scalar_json();
  j["model"] = "I";
  j["d"] = 2;
  const ModelConfig c = parse_model_config(j);
  EXPECT_EQ(c.dim(), 8);
  EXPECT_EQ(c.build().dim, 8);
}

TEST(ModelConfig, MalformedFilesAreRejected) {
  auto expect_bad = [](json j) { EXPECT_THROW(parse_model_config(j), InvalidArgument) << j.dump(); };
  json j = scalar_json();
  j["schema"] = 2;
  expect_bad(j);
  j = scalar_json();
  j["model"] = "III";
  expect_bad(j);
  j = scalar_json();
  j.erase("a");
  expect_bad(j);
  j = scalar_json();
  j["a"] = {1, 2};
  expect_bad(j);
  j = scalar_json();
  j["A"] = {{1, 1}, {1, 1}};
  expect_bad(j);
  j = scalar_json();
  j["A"][0][1] = json::array({1.0, 0.5});  // complex coupling in a real model
  expect_bad(j);
  j = scalar_json();
  j["n"] = "two";
  expect_bad(j);
  j = model2_json();
  j["B"][0][1] = 0.3;  // no longer Hermitian
  expect_bad(j);
  j = model2_json();
  j["A"][0][0] = json::array({1.0, 2.0, 3.0});
  expect_bad(j);
  expect_bad(json::array({1, 2}));
}

TEST(ModelConfig, FilesOnDisk) {
  const std::string path = ::testing::TempDir() + "mdp_config_test.json";
  {
    std::ofstream out(path);
    out << scalar_json().dump();
  }
  EXPECT_EQ(load_model_config(path).n, 2);
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  EXPECT_THROW(load_model_config(path), InvalidArgument);
  {
    std::ofstream out(path);
    out << "[0.2, 0.3]";
  }
  EXPECT_EQ(load_point(path, 2)(1), 0.3);
  EXPECT_THROW(load_point(path, 3), InvalidArgument);
  std::remove(path.c_str());
  EXPECT_THROW(load_model_config(path), InvalidArgument);
}
