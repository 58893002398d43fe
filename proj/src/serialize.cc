// Copyright 2026 The fpca Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fpca/serialize.h"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace fpca {

namespace json_detail {

[[noreturn]] void Fail(const std::string& what, const std::string& loc) {
  throw ParseError(what, loc.empty() ? "/" : loc);
}

const Json& Field(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) Fail("expected an object", path);
  auto it = j.find(key);
  if (it == j.end()) Fail("missing field '" + key + "'", path);
  return *it;
}

double Number(const Json& j, const std::string& path) {
  if (!j.is_number()) Fail("expected a number", path);
  return j.get<double>();
}

int64_t Integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) Fail("expected an integer", path);
  return j.get<int64_t>();
}

uint64_t Unsigned(const Json& j, const std::string& path) {
  if (!j.is_number_unsigned()) Fail("expected a non-negative integer", path);
  return j.get<uint64_t>();
}

bool Boolean(const Json& j, const std::string& path) {
  if (!j.is_boolean()) Fail("expected a boolean", path);
  return j.get<bool>();
}

std::string String(const Json& j, const std::string& path) {
  if (!j.is_string()) Fail("expected a string", path);
  return j.get<std::string>();
}

void RejectUnknown(const Json& j, const std::set<std::string>& known,
                   const std::string& path) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) Fail("unknown field '" + it.key() + "'", path + "/" + it.key());
  }
}

}  // namespace json_detail

namespace {

using namespace json_detail;

Json MatrixToJson(const Matrix& A) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < A.cols(); ++c) row.push_back(A(i, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix MatrixFromJson(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) Fail("expected a non-empty list of rows", path);
  const size_t rows = j.size();
  size_t cols = 0;
  Matrix A;
  for (size_t i = 0; i < rows; ++i) {
    const std::string rp = path + "/" + std::to_string(i);
    const Json& row = j[i];
    if (!row.is_array() || row.empty()) Fail("expected a non-empty row", rp);
    if (i == 0) {
      cols = row.size();
      A.resize(rows, cols);
    } else if (row.size() != cols) {
      Fail("ragged matrix row", rp);
    }
    for (size_t c = 0; c < cols; ++c) {
      A(i, c) = Number(row[c], rp + "/" + std::to_string(c));
    }
  }
  return A;
}

Json VectorToJson(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json BudgetToJson(const EnumBudget& b) {
  Json j;
  j["max_candidates"] = b.max_candidates;
  j["max_seconds"] = b.max_seconds;
  j["subsample_rate"] = b.subsample_rate;
  j["seed"] = b.seed;
  j["max_net_points"] = b.max_net_points;
  return j;
}

EnumBudget BudgetFromJson(const Json& j, const std::string& path) {
  if (!j.is_object()) Fail("expected an object", path);
  RejectUnknown(j, {"max_candidates", "max_seconds", "subsample_rate", "seed",
                    "max_net_points"}, path);
  EnumBudget b;
  if (j.contains("max_candidates")) b.max_candidates = Integer(j["max_candidates"], path + "/max_candidates");
  if (j.contains("max_seconds")) b.max_seconds = Number(j["max_seconds"], path + "/max_seconds");
  if (j.contains("subsample_rate")) b.subsample_rate = Number(j["subsample_rate"], path + "/subsample_rate");
  if (j.contains("seed")) b.seed = Unsigned(j["seed"], path + "/seed");
  if (j.contains("max_net_points")) b.max_net_points = Integer(j["max_net_points"], path + "/max_net_points");
  return b;
}

}  // namespace

using namespace json_detail;

Json ParseJson(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), "byte " + std::to_string(e.byte));
  }
}

Json NetworkToJson(const ReluNetwork& net) {
  Json j;
  j["input_dim"] = net.input_dim();
  j["depth"] = net.depth();
  Json layers = Json::array();
  for (const Matrix& W : net.layers()) layers.push_back(MatrixToJson(W));
  j["layers"] = std::move(layers);
  Json meta = Json::object();
  if (net.meta().B) meta["B"] = *net.meta().B;
  if (net.meta().Lambda) meta["Lambda"] = *net.meta().Lambda;
  if (net.meta().seed) meta["seed"] = *net.meta().seed;
  if (net.meta().rank) meta["rank"] = *net.meta().rank;
  j["meta"] = std::move(meta);
  return j;
}

ReluNetwork NetworkFromJson(const Json& j) {
  if (!j.is_object()) Fail("expected an object", "");
  RejectUnknown(j, {"input_dim", "depth", "layers", "meta"}, "");
  const int64_t d = Integer(Field(j, "input_dim", ""), "/input_dim");
  const int64_t depth = Integer(Field(j, "depth", ""), "/depth");
  const Json& layers = Field(j, "layers", "");
  if (!layers.is_array()) Fail("expected a list of matrices", "/layers");
  std::vector<Matrix> ws;
  for (size_t i = 0; i < layers.size(); ++i) {
    ws.push_back(MatrixFromJson(layers[i], "/layers/" + std::to_string(i)));
  }
  NetworkMeta meta;
  if (j.contains("meta")) {
    const Json& m = j["meta"];
    if (!m.is_object()) Fail("expected an object", "/meta");
    RejectUnknown(m, {"B", "Lambda", "seed", "rank"}, "/meta");
    if (m.contains("B")) meta.B = Number(m["B"], "/meta/B");
    if (m.contains("Lambda")) meta.Lambda = Number(m["Lambda"], "/meta/Lambda");
    if (m.contains("seed")) meta.seed = Unsigned(m["seed"], "/meta/seed");
    if (m.contains("rank")) meta.rank = static_cast<int>(Integer(m["rank"], "/meta/rank"));
  }
  try {
    ReluNetwork net(std::move(ws), meta);
    if (net.input_dim() != d) Fail("input_dim does not match the first layer", "/input_dim");
    if (net.depth() != depth) Fail("depth does not match the layer count", "/depth");
    return net;
  } catch (const InvalidArgument& e) {
    Fail(e.what(), "/layers");
  }
}

std::string NetworkToText(const ReluNetwork& net) { return NetworkToJson(net).dump(2) + "\n"; }

ReluNetwork NetworkFromText(const std::string& text) { return NetworkFromJson(ParseJson(text)); }

Json LatticeToJson(const LatticePolynomial& g) {
  Json j;
  j["dim"] = g.dim();
  j["leaves"] = MatrixToJson(g.leaves());
  Json clauses = Json::array();
  for (const Clause& c : g.clauses()) clauses.push_back(c);
  j["clauses"] = std::move(clauses);
  return j;
}

LatticePolynomial LatticeFromJson(const Json& j) {
  if (!j.is_object()) Fail("expected an object", "");
  RejectUnknown(j, {"dim", "leaves", "clauses"}, "");
  const int64_t dim = Integer(Field(j, "dim", ""), "/dim");
  Matrix leaves = MatrixFromJson(Field(j, "leaves", ""), "/leaves");
  if (leaves.cols() != dim) Fail("leaf length differs from dim", "/leaves");
  const Json& cj = Field(j, "clauses", "");
  if (!cj.is_array()) Fail("expected a list of clauses", "/clauses");
  std::vector<Clause> clauses;
  for (size_t i = 0; i < cj.size(); ++i) {
    const std::string p = "/clauses/" + std::to_string(i);
    if (!cj[i].is_array()) Fail("expected a list of leaf indices", p);
    Clause c;
    for (size_t t = 0; t < cj[i].size(); ++t) {
      c.push_back(static_cast<int>(Integer(cj[i][t], p + "/" + std::to_string(t))));
    }
    clauses.push_back(std::move(c));
  }
  try {
    return LatticePolynomial(std::move(leaves), std::move(clauses));
  } catch (const InvalidArgument& e) {
    Fail(e.what(), "/clauses");
  }
}

std::string LatticeToText(const LatticePolynomial& g) { return LatticeToJson(g).dump(2) + "\n"; }

LatticePolynomial LatticeFromText(const std::string& text) {
  return LatticeFromJson(ParseJson(text));
}

Json SelectorToJson(const SelectorKicker& s) {
  Json j;
  j["dim"] = s.dim();
  j["leaves"] = MatrixToJson(s.leaves());
  j["table"] = s.table();
  return j;
}

SelectorKicker SelectorFromJson(const Json& j) {
  if (!j.is_object()) Fail("expected an object", "");
  RejectUnknown(j, {"dim", "leaves", "table"}, "");
  Matrix leaves = MatrixFromJson(Field(j, "leaves", ""), "/leaves");
  if (leaves.cols() != Integer(Field(j, "dim", ""), "/dim")) {
    Fail("leaf length differs from dim", "/leaves");
  }
  const Json& tj = Field(j, "table", "");
  if (!tj.is_array()) Fail("expected a list", "/table");
  std::vector<int> table;
  for (size_t i = 0; i < tj.size(); ++i) {
    table.push_back(static_cast<int>(Integer(tj[i], "/table/" + std::to_string(i))));
  }
  try {
    return SelectorKicker(std::move(leaves), std::move(table));
  } catch (const std::exception& e) {
    Fail(e.what(), "/table");
  }
}

Json HypothesisToJson(const Hypothesis& h) {
  Json j;
  if (const auto* net = std::get_if<ReluNetwork>(&h)) {
    j["kind"] = "network";
    j["network"] = NetworkToJson(*net);
  } else {
    j["kind"] = "kicker";
    j["kicker"] = SelectorToJson(std::get<SelectorKicker>(h));
  }
  return j;
}

Json LearnConfigToJson(const LearnConfig& c) {
  Json j;
  j["epsilon"] = c.epsilon;
  j["delta"] = c.delta;
  j["k"] = c.k;
  j["S"] = c.S;
  j["L"] = c.L;
  j["B"] = c.B;
  j["Lambda"] = c.Lambda;
  j["c"] = c.c;
  j["tau"] = c.tau();
  if (c.lambda_bar) j["lambda_bar"] = *c.lambda_bar;
  if (c.lambda_acc) j["lambda_acc"] = *c.lambda_acc;
  j["lambda_acc_fraction"] = c.lambda_acc_fraction;
  j["N"] = c.N;
  j["N_prime"] = c.N_prime;
  j["N_calibration"] = c.N_calibration;
  if (c.nu0) j["nu0"] = *c.nu0;
  if (c.xi) j["xi"] = *c.xi;
  j["seed"] = c.seed;
  j["mode"] = c.mode == Mode::kPaperStrict ? "paper-strict" : "practical";
  j["hypothesis"] = c.hypothesis == HypothesisKind::kKicker ? "kicker" : "network";
  j["M"] = c.M;
  j["tau_mode"] = c.tau_mode == TauMode::kQuantile ? "quantile" : "formula";
  j["tau_quantile"] = c.tau_quantile;
  if (c.eps_prime_loop) j["eps_prime_loop"] = *c.eps_prime_loop;
  if (c.eps_prime_final) j["eps_prime_final"] = *c.eps_prime_final;
  j["budget"] = BudgetToJson(c.budget);
  j["final_budget"] = BudgetToJson(c.final_budget);
  return j;
}

LearnConfig LearnConfigFromJson(const Json& j) {
  if (!j.is_object()) Fail("expected an object", "");
  RejectUnknown(j, {"epsilon", "delta", "k", "S", "L", "B", "Lambda", "c", "tau",
                    "lambda_bar", "lambda_acc", "lambda_acc_fraction", "N", "N_prime",
                    "N_calibration", "nu0", "xi", "seed", "mode", "hypothesis", "M",
                    "tau_mode", "tau_quantile", "eps_prime_loop", "eps_prime_final",
                    "budget", "final_budget"}, "");
  LearnConfig c;
  auto num = [&](const char* key, double* out) {
    if (j.contains(key)) *out = Number(j[key], std::string("/") + key);
  };
  auto opt = [&](const char* key, std::optional<double>* out) {
    if (j.contains(key)) *out = Number(j[key], std::string("/") + key);
  };
  auto integer = [&](const char* key, auto* out) {
    if (j.contains(key)) {
      *out = static_cast<std::remove_pointer_t<decltype(out)>>(
          Integer(j[key], std::string("/") + key));
    }
  };
  num("epsilon", &c.epsilon);
  num("delta", &c.delta);
  integer("k", &c.k);
  integer("S", &c.S);
  integer("L", &c.L);
  num("B", &c.B);
  num("Lambda", &c.Lambda);
  num("c", &c.c);
  opt("lambda_bar", &c.lambda_bar);
  opt("lambda_acc", &c.lambda_acc);
  num("lambda_acc_fraction", &c.lambda_acc_fraction);
  integer("N", &c.N);
  integer("N_prime", &c.N_prime);
  integer("N_calibration", &c.N_calibration);
  opt("nu0", &c.nu0);
  opt("xi", &c.xi);
  if (j.contains("seed")) c.seed = Unsigned(j["seed"], "/seed");
  if (j.contains("mode")) {
    std::string m = String(j["mode"], "/mode");
    if (m == "practical") c.mode = Mode::kPractical;
    else if (m == "paper-strict") c.mode = Mode::kPaperStrict;
    else Fail("mode must be 'practical' or 'paper-strict'", "/mode");
  }
  if (j.contains("hypothesis")) {
    std::string h = String(j["hypothesis"], "/hypothesis");
    if (h == "network") c.hypothesis = HypothesisKind::kNetwork;
    else if (h == "kicker") c.hypothesis = HypothesisKind::kKicker;
    else Fail("hypothesis must be 'network' or 'kicker'", "/hypothesis");
  }
  integer("M", &c.M);
  if (c.mode == Mode::kPaperStrict) c.tau_mode = TauMode::kFormula;
  if (j.contains("tau_mode")) {
    std::string t = String(j["tau_mode"], "/tau_mode");
    if (t == "formula") c.tau_mode = TauMode::kFormula;
    else if (t == "quantile") c.tau_mode = TauMode::kQuantile;
    else Fail("tau_mode must be 'formula' or 'quantile'", "/tau_mode");
  }
  num("tau_quantile", &c.tau_quantile);
  opt("eps_prime_loop", &c.eps_prime_loop);
  opt("eps_prime_final", &c.eps_prime_final);
  if (j.contains("budget")) c.budget = BudgetFromJson(j["budget"], "/budget");
  if (j.contains("final_budget")) {
    c.final_budget = BudgetFromJson(j["final_budget"], "/final_budget");
  }
  c.budget.paper_strict = c.final_budget.paper_strict = c.mode == Mode::kPaperStrict;
  try {
    c.Validate();
  } catch (const InvalidArgument& e) {
    Fail(e.what(), "");
  }
  return c;
}

Json ConstantsToJson(const EffectiveConstants& k) {
  Json j;
  j["tau"] = k.tau;
  j["lambda_bar"] = k.lambda_bar;
  j["lambda_acc"] = k.lambda_acc;
  j["nu0"] = k.nu0;
  j["xi"] = k.xi;
  j["N"] = k.N;
  j["N_prime"] = k.N_prime;
  j["N_calibration"] = k.N_calibration;
  j["eps_prime_loop"] = k.eps_prime_loop;
  j["eps_prime_final"] = k.eps_prime_final;
  j["svd_eta"] = k.svd_eta;
  return j;
}

Json RecoveryToJson(const RecoveryResult& r) {
  Json j;
  Json frame = Json::array();
  for (int i = 0; i < r.frame.size(); ++i) frame.push_back(VectorToJson(r.frame.vector(i)));
  j["frame"] = std::move(frame);
  Json trace = Json::array();
  for (const IterationTrace& t : r.trace) {
    Json e;
    e["ell"] = t.ell;
    e["accepted_index"] = t.accepted_index;
    e["lambda"] = t.lambda;
    e["candidates_examined"] = t.candidates_examined;
    e["candidates_total"] = t.candidates_total;
    e["tau_used"] = t.tau_used;
    e["svd_converged"] = t.svd_converged;
    if (t.nearness) e["nearness"] = *t.nearness;
    trace.push_back(std::move(e));
  }
  j["trace"] = std::move(trace);
  j["eps_hat"] = r.eps_hat;
  j["certified"] = r.certified;
  j["final_candidates_examined"] = r.final_candidates_examined;
  j["final_candidates_total"] = r.final_candidates_total;
  if (r.failure_reason) j["failure_reason"] = *r.failure_reason;
  j["constants"] = ConstantsToJson(r.constants);
  if (r.hypothesis) j["hypothesis"] = HypothesisToJson(*r.hypothesis);
  return j;
}

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string SamplesToCsv(const SampleSet& s) {
  std::string out;
  for (int i = 0; i < s.dim(); ++i) out += "x" + std::to_string(i + 1) + ",";
  out += "y\n";
  for (int64_t n = 0; n < s.size(); ++n) {
    for (int i = 0; i < s.dim(); ++i) out += FormatDouble(s.X(i, n)) + ",";
    out += FormatDouble(s.y(n)) + "\n";
  }
  return out;
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << content;
}

}  // namespace fpca
