// Copyright 2026 The Diverlink Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "diverlink/metrics.hpp"

#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "diverlink/error.hpp"

namespace diverlink {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> labels)
    : labels_(std::move(labels)),
      counts_(labels_.size() * labels_.size(), 0),
      rejected_(labels_.size(), 0) {}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted) {
  if (truth >= classes() || predicted >= classes()) throw ArgumentError("confusion: class out of range");
  ++counts_[truth * classes() + predicted];
}

void ConfusionMatrix::add_rejected(std::size_t truth) {
  if (truth >= classes()) throw ArgumentError("confusion: class out of range");
  ++rejected_[truth];
}

std::size_t ConfusionMatrix::count(std::size_t truth, std::size_t predicted) const {
  return counts_[truth * classes() + predicted];
}

std::size_t ConfusionMatrix::row_total(std::size_t truth) const {
  std::size_t n = rejected_[truth];
  for (std::size_t p = 0; p < classes(); ++p) n += count(truth, p);
  return n;
}

std::size_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0}) +
         std::accumulate(rejected_.begin(), rejected_.end(), std::size_t{0});
}

double ConfusionMatrix::accuracy() const {
  const std::size_t n = total();
  if (n == 0) return 0.0;
  std::size_t hit = 0;
  for (std::size_t c = 0; c < classes(); ++c) hit += count(c, c);
  return static_cast<double>(hit) / static_cast<double>(n);
}

std::vector<std::vector<double>> ConfusionMatrix::row_normalized() const {
  std::vector<std::vector<double>> out(classes(), std::vector<double>(classes(), 0.0));
  for (std::size_t t = 0; t < classes(); ++t) {
    const std::size_t n = row_total(t);
    if (n == 0) continue;
    for (std::size_t p = 0; p < classes(); ++p) {
      out[t][p] = static_cast<double>(count(t, p)) / static_cast<double>(n);
    }
  }
  return out;
}

double ConfusionMatrix::diagonal_mean() const {
  if (classes() == 0) return 0.0;
  const auto m = row_normalized();
  double s = 0.0;
  for (std::size_t c = 0; c < classes(); ++c) s += m[c][c];
  return s / static_cast<double>(classes());
}

std::string ConfusionMatrix::to_table() const {
  const auto m = row_normalized();
  std::string out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-12s", "true\\pred");
  out += buf;
  for (const auto& l : labels_) {
    std::snprintf(buf, sizeof buf, "%12.11s", l.c_str());
    out += buf;
  }
  out += "      reject\n";
  for (std::size_t t = 0; t < classes(); ++t) {
    std::snprintf(buf, sizeof buf, "%-12.11s", labels_[t].c_str());
    out += buf;
    for (std::size_t p = 0; p < classes(); ++p) {
      std::snprintf(buf, sizeof buf, "%11.1f%%", 100.0 * m[t][p]);
      out += buf;
    }
    const std::size_t n = row_total(t);
    std::snprintf(buf, sizeof buf, "%11.1f%%\n",
                  n == 0 ? 0.0 : 100.0 * static_cast<double>(rejected_[t]) / static_cast<double>(n));
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "accuracy %.4f  (n=%zu)\n", accuracy(), total());
  out += buf;
  return out;
}

std::string ConfusionMatrix::to_json() const {
  nlohmann::json j;
  j["labels"] = labels_;
  nlohmann::json counts = nlohmann::json::array();
  for (std::size_t t = 0; t < classes(); ++t) {
    std::vector<std::size_t> row(counts_.begin() + static_cast<std::ptrdiff_t>(t * classes()),
                                 counts_.begin() + static_cast<std::ptrdiff_t>((t + 1) * classes()));
    counts.push_back(row);
  }
  j["counts"] = counts;
  j["rejected"] = rejected_;
  j["normalized"] = row_normalized();
  j["accuracy"] = accuracy();
  return j.dump();
}

}  // namespace diverlink
