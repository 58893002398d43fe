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
#include <random>
#include <string>

#include "gtest/gtest.h"

namespace fpca {
namespace {

constexpr char kSpikeFile[] = R"({
  "input_dim": 2,
  "depth": 0,
  "layers": [
    [[1, 10], [3, 10], [-1, 10]],
    [[1, 1, -2]]
  ],
  "meta": {"Lambda": 10}
})";

std::string ParseErrorLocation(const std::string& text) {
  try {
    NetworkFromText(text);
  } catch (const ParseError& e) {
    return e.location;
  }
  return "<no error>";
}

TEST(NetworkJsonTest, RoundTripIsBitwise) {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    ReluNetwork net = RandomNetwork(4, {3, 2}, 1.3, seed);
    std::string text = NetworkToText(net);
    ReluNetwork back = NetworkFromText(text);
    EXPECT_TRUE(back == net);
    EXPECT_EQ(back.meta(), net.meta());
    EXPECT_EQ(NetworkToText(back), text);
  }
}

TEST(NetworkJsonTest, FieldOrderIsStable) {
  std::string text = NetworkToText(SpikeNetwork(10));
  EXPECT_LT(text.find("input_dim"), text.find("depth"));
  EXPECT_LT(text.find("depth"), text.find("layers"));
  EXPECT_LT(text.find("layers"), text.find("meta"));
}

TEST(NetworkJsonTest, HandWrittenSpikeFile) {
  ReluNetwork net = NetworkFromText(kSpikeFile);
  ReluNetwork want = SpikeNetwork(10);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 1000; ++t) {
    Vector x(2);
    x << normal(rng), normal(rng);
    EXPECT_EQ(net.Eval(x), want.Eval(x));
  }
  EXPECT_EQ(net.meta().Lambda, 10.0);
}

TEST(NetworkJsonTest, EmptyInputIsAParseError) {
  EXPECT_THROW(NetworkFromText(""), ParseError);
  EXPECT_THROW(NetworkFromText("   "), ParseError);
}

TEST(NetworkJsonTest, ErrorsCarryLocations) {
  EXPECT_EQ(ParseErrorLocation("{\"input_dim\": 2,"), "byte 17");
  EXPECT_EQ(ParseErrorLocation("[]"), "/");
  EXPECT_EQ(ParseErrorLocation(R"({"input_dim": 2, "depth": 0})"), "/");
  EXPECT_EQ(ParseErrorLocation(
                R"({"input_dim": 2, "depth": 0, "layers": [[[1, 2]], [[1]]], "extra": 1})"),
            "/extra");
  EXPECT_EQ(ParseErrorLocation(
                R"({"input_dim": 2, "depth": 0, "layers": [[[1, 2], [3]], [[1, 1]]]})"),
            "/layers/0/1");
  EXPECT_EQ(ParseErrorLocation(
                R"({"input_dim": 2, "depth": 0, "layers": [[[1, "a"]], [[1]]]})"),
            "/layers/0/0/1");
  EXPECT_EQ(ParseErrorLocation(
                R"({"input_dim": 3, "depth": 0, "layers": [[[1, 2]], [[1]]]})"),
            "/input_dim");
  EXPECT_EQ(ParseErrorLocation(
                R"({"input_dim": 2, "depth": 0, "layers": [[[1, 2]], [[1, 1]]]})"),
            "/layers");
  EXPECT_EQ(ParseErrorLocation(
                R"({"input_dim": 2, "depth": 0, "layers": [[[1, 2]], [[1]]], "meta": {"q": 1}})"),
            "/meta/q");
}

TEST(LatticeJsonTest, RoundTrip) {
  LatticePolynomial g = FromNetwork(RandomNetwork(3, {2, 2}, 1.0, 2));
  std::string text = LatticeToText(g);
  LatticePolynomial back = LatticeFromText(text);
  EXPECT_EQ(back.leaves(), g.leaves());
  EXPECT_EQ(back.clauses(), g.clauses());
  EXPECT_EQ(LatticeToText(back), text);
}

TEST(LatticeJsonTest, RejectsBadClause) {
  EXPECT_THROW(LatticeFromText(R"({"dim": 1, "leaves": [[1]], "clauses": [[3]]})"),
               ParseError);
  EXPECT_THROW(LatticeFromText(R"({"dim": 1, "leaves": [[1]], "clauses": [[]]})"),
               ParseError);
}

TEST(SelectorJsonTest, RoundTrip) {
  Matrix leaves(2, 2);
  leaves << 1, 0, 0, 1;
  SelectorKicker s(leaves, {0, 1, 1});
  SelectorKicker back = SelectorFromJson(SelectorToJson(s));
  EXPECT_EQ(back.leaves(), s.leaves());
  EXPECT_EQ(back.table(), s.table());
}

TEST(HypothesisJsonTest, TagsKind) {
  EXPECT_EQ(HypothesisToJson(Hypothesis(SpikeNetwork(2)))["kind"], "network");
  Matrix leaf(1, 1);
  leaf << 1;
  EXPECT_EQ(HypothesisToJson(Hypothesis(SelectorKicker(leaf, {0})))["kind"], "kicker");
}

TEST(LearnConfigJsonTest, RoundTrip) {
  LearnConfig c;
  c.epsilon = 0.07;
  c.k = 2;
  c.S = 3;
  c.L = 1;
  c.lambda_acc = 0.02;
  c.eps_prime_final = 0.3;
  c.hypothesis = HypothesisKind::kKicker;
  c.budget.subsample_rate = 0.5;
  c.budget.seed = 9;
  c.final_budget.max_seconds = 12;
  Json j = LearnConfigToJson(c);
  LearnConfig back = LearnConfigFromJson(j);
  EXPECT_EQ(LearnConfigToJson(back).dump(), j.dump());
}

TEST(LearnConfigJsonTest, MissingFieldsKeepDefaults) {
  LearnConfig c = LearnConfigFromJson(ParseJson(R"({"k": 3})"));
  EXPECT_EQ(c.k, 3);
  EXPECT_EQ(c.epsilon, LearnConfig{}.epsilon);
  EXPECT_EQ(c.tau_mode, TauMode::kQuantile);
}

TEST(LearnConfigJsonTest, PaperStrictImpliesFormulaThreshold) {
  LearnConfig c = LearnConfigFromJson(
      ParseJson(R"({"mode": "paper-strict", "lambda_bar": 0.01})"));
  EXPECT_EQ(c.mode, Mode::kPaperStrict);
  EXPECT_EQ(c.tau_mode, TauMode::kFormula);
  EXPECT_TRUE(c.budget.paper_strict);
  EXPECT_TRUE(c.final_budget.paper_strict);
}

TEST(LearnConfigJsonTest, RejectsInvalidValues) {
  auto location = [](const std::string& text) {
    try {
      LearnConfigFromJson(ParseJson(text));
    } catch (const ParseError& e) {
      return e.location;
    }
    return std::string("<no error>");
  };
  EXPECT_EQ(location(R"({"mode": "fast"})"), "/mode");
  EXPECT_EQ(location(R"({"epsilon": "small"})"), "/epsilon");
  EXPECT_EQ(location(R"({"budget": {"max_candidates": 1.5}})"), "/budget/max_candidates");
  EXPECT_EQ(location(R"({"unknown": 1})"), "/unknown");
  EXPECT_NE(location(R"({"epsilon": 2})"), "<no error>");
  EXPECT_NE(location(R"({"mode": "paper-strict", "lambda_bar": 0.1, "tau_mode": "quantile"})"),
            "<no error>");
}

TEST(FormatDoubleTest, RoundTripsExactly) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) {
    EXPECT_EQ(std::stod(FormatDouble(v)), v);
  }
}

TEST(SamplesToCsvTest, HeaderAndRows) {
  SampleSet s;
  s.X = Matrix(2, 2);
  s.X << 1, 3, 2, 4;
  s.y = Vector(2);
  s.y << 0.5, -1;
  EXPECT_EQ(SamplesToCsv(s), "x1,x2,y\n1,2,0.5\n3,4,-1\n");
}

TEST(FileTest, WriteThenRead) {
  std::string path = ::testing::TempDir() + "/fpca_serialize_test.json";
  WriteFile(path, "{\"a\": 1}\n");
  EXPECT_EQ(ReadFile(path), "{\"a\": 1}\n");
  std::remove(path.c_str());
  EXPECT_ANY_THROW(ReadFile(path));
}

}  // namespace
}  // namespace fpca
