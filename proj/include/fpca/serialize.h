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

// JSON text formats for networks, lattice polynomials, selectors and learner
// configs, plus CSV helpers.

#ifndef FPCA_SERIALIZE_H_
#define FPCA_SERIALIZE_H_

#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "fpca/filteredpca.h"
#include "fpca/lattice.h"
#include "fpca/network.h"

namespace fpca {

using Json = nlohmann::ordered_json;

// Typed field access that reports failures as ParseError at a JSON pointer.
namespace json_detail {
[[noreturn]] void Fail(const std::string& what, const std::string& loc);
const Json& Field(const Json& j, const std::string& key, const std::string& path);
double Number(const Json& j, const std::string& path);
int64_t Integer(const Json& j, const std::string& path);
uint64_t Unsigned(const Json& j, const std::string& path);
bool Boolean(const Json& j, const std::string& path);
std::string String(const Json& j, const std::string& path);
void RejectUnknown(const Json& j, const std::set<std::string>& known,
                   const std::string& path);
}  // namespace json_detail

// Parses JSON text, reporting syntax errors with their byte offset.
Json ParseJson(const std::string& text);

Json NetworkToJson(const ReluNetwork& net);
ReluNetwork NetworkFromJson(const Json& j);
std::string NetworkToText(const ReluNetwork& net);
ReluNetwork NetworkFromText(const std::string& text);

Json LatticeToJson(const LatticePolynomial& g);
LatticePolynomial LatticeFromJson(const Json& j);
std::string LatticeToText(const LatticePolynomial& g);
LatticePolynomial LatticeFromText(const std::string& text);

Json SelectorToJson(const SelectorKicker& s);
SelectorKicker SelectorFromJson(const Json& j);

Json HypothesisToJson(const Hypothesis& h);

Json LearnConfigToJson(const LearnConfig& c);
// Missing fields keep their defaults.
LearnConfig LearnConfigFromJson(const Json& j);

Json ConstantsToJson(const EffectiveConstants& k);
Json RecoveryToJson(const RecoveryResult& r);

// 17 significant digits.
std::string FormatDouble(double v);
// Header row, then one row per sample: x_1..x_d, y.
std::string SamplesToCsv(const SampleSet& s);

std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, const std::string& content);

}  // namespace fpca

#endif  // FPCA_SERIALIZE_H_
