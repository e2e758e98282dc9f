#pragma once

#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "mdp/errors.hpp"
#include "mdp/matrix_simplex.hpp"
#include "mdp/simplex.hpp"

namespace mdp {

// Z<p>_<i><j>[re|im], 1-based, in the order of the realified coordinates.
inline std::vector<std::string> matrix_coordinate_names(int n, int d) {
  std::vector<std::string> out;
  const HermitianLayout layout(n, d);
  for (const auto& c : layout.coords()) {
    std::string s = "Z" + std::to_string(c.block + 1) + "_" + std::to_string(c.i + 1) + std::to_string(c.j + 1);
    if (c.i != c.j) s += c.imaginary ? "im" : "re";
    out.push_back(s);
  }
  return out;
}

// Model parameter file, schema 1:
//   {"schema": 1, "model": "scalar" | "I" | "II", "n": n, "d": d, "A": [[...]], "B": [[...]], "a": [...]}
// "scalar" and "I" take a real (n+1) x (n+1) coupling; "II" takes a d x d A and a d^2 x d^2 B
// whose entries are numbers or [re, im] pairs. "d" defaults to 1.
struct ModelConfig {
  static constexpr int kSchema = 1;

  std::string model;
  int n = 1;
  int d = 1;
  RealMatrix A_real;
  ComplexMatrix A_complex;
  ComplexMatrix B;
  RealVector a;

  bool is_scalar() const { return model == "scalar"; }

  int dim() const { return is_scalar() ? n : HermitianLayout(n, d).dim(); }

  SimplexParams simplex_params() const { return {A_real, a}; }
  ModelIParams model1_params() const { return {n, d, A_real, a}; }
  ModelIIParams model2_params() const { return {n, d, A_complex, B, a}; }

  void validate() const {
    if (model == "scalar") {
      if (d != 1) throw InvalidArgument("config: the scalar model has d = 1");
      if (n < 1) throw InvalidArgument("config: need n >= 1");
      if (A_real.rows() != n + 1 || A_real.cols() != n + 1) throw InvalidArgument("config: A must be (n+1)x(n+1)");
      if (a.size() != n + 1) throw InvalidArgument("config: a must have n+1 entries");
    } else if (model == "I") {
      model1_params().validate();
    } else if (model == "II") {
      model2_params().validate();
    } else {
      throw InvalidArgument("config: model must be \"scalar\", \"I\" or \"II\"");
    }
  }

  DiffusionModel build() const {
    validate();
    if (model == "scalar") return make_simplex_model(simplex_params());
    if (model == "I") return make_model1(model1_params());
    return make_model2(model2_params());
  }

  // Barycentre of the simplex: x_i = 1/(n+1), or Z^(p) = Id/(n+1).
  RealVector barycenter() const {
    if (is_scalar()) return RealVector::Constant(n, 1.0 / (n + 1));
    return HermitianLayout(n, d).realify(MatrixPoint(n, HermitianMatrix::identity(d) * (1.0 / (n + 1))));
  }

  // x1..xn for the scalar model.
  std::vector<std::string> coordinate_names() const {
    if (!is_scalar()) return matrix_coordinate_names(n, d);
    std::vector<std::string> out;
    for (int i = 1; i <= n; ++i) out.push_back("x" + std::to_string(i));
    return out;
  }
};

namespace detail {

inline cplx json_complex(const nlohmann::json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  throw InvalidArgument("config: expected a number or an [re, im] pair");
}

inline ComplexMatrix json_complex_matrix(const nlohmann::json& v, int rows, const char* name) {
  if (!v.is_array() || static_cast<int>(v.size()) != rows)
    throw InvalidArgument(std::string("config: ") + name + " must have " + std::to_string(rows) + " rows");
  ComplexMatrix m(rows, rows);
  for (int i = 0; i < rows; ++i) {
    if (!v[i].is_array() || static_cast<int>(v[i].size()) != rows)
      throw InvalidArgument(std::string("config: ") + name + " must be square");
    for (int j = 0; j < rows; ++j) m(i, j) = json_complex(v[i][j]);
  }
  return m;
}

inline RealMatrix json_real_matrix(const nlohmann::json& v, int rows, const char* name) {
  const ComplexMatrix c = json_complex_matrix(v, rows, name);
  if (c.imag().cwiseAbs().maxCoeff() != 0.0) throw InvalidArgument(std::string("config: ") + name + " must be real");
  return c.real();
}

}  // namespace detail

inline ModelConfig parse_model_config(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("config: expected a JSON object");
  ModelConfig c;
  try {
    if (j.at("schema").get<int>() != ModelConfig::kSchema)
      throw InvalidArgument("config: unsupported schema " + j.at("schema").dump());
    c.model = j.at("model").get<std::string>();
    c.n = j.at("n").get<int>();
    c.d = j.value("d", 1);
    if (c.n < 1 || c.d < 1) throw InvalidArgument("config: need n >= 1 and d >= 1");
    const nlohmann::json& a = j.at("a");
    if (!a.is_array() || static_cast<int>(a.size()) != c.n + 1)
      throw InvalidArgument("config: a must have n+1 entries");
    c.a = RealVector(c.n + 1);
    for (int i = 0; i <= c.n; ++i) c.a(i) = a[i].get<double>();
    if (c.model == "II") {
      c.A_complex = detail::json_complex_matrix(j.at("A"), c.d, "A");
      c.B = j.contains("B") ? detail::json_complex_matrix(j.at("B"), c.d * c.d, "B")
                            : ComplexMatrix(ComplexMatrix::Zero(c.d * c.d, c.d * c.d));
    } else {
      c.A_real = detail::json_real_matrix(j.at("A"), c.n + 1, "A");
      if (j.contains("B")) throw InvalidArgument("config: B is only used by model II");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline ModelConfig load_model_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("config: cannot open " + path);
  try {
    return parse_model_config(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument("config: " + path + ": " + e.what());
  }
}

// A starting point file holds a JSON array of realified coordinates.
inline RealVector load_point(const std::string& path, int dim) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("x0: cannot open " + path);
  try {
    const auto v = nlohmann::json::parse(in).get<std::vector<double>>();
    if (static_cast<int>(v.size()) != dim)
      throw InvalidArgument("x0: expected " + std::to_string(dim) + " coordinates");
    return Eigen::Map<const RealVector>(v.data(), dim);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("x0: ") + e.what());
  }
}

}  // namespace mdp
