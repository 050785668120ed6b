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

#ifndef DIVERLINK_METRICS_HPP
#define DIVERLINK_METRICS_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace diverlink {

// Rows are true classes, columns predictions. An optional trailing column
// counts rejected ("no intention") outputs.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::vector<std::string> labels);

  void add(std::size_t truth, std::size_t predicted);
  void add_rejected(std::size_t truth);

  std::size_t classes() const { return labels_.size(); }
  std::size_t count(std::size_t truth, std::size_t predicted) const;
  std::size_t rejected(std::size_t truth) const { return rejected_[truth]; }
  std::size_t row_total(std::size_t truth) const;
  std::size_t total() const;

  // Overall fraction of samples on the diagonal (rejections count as errors).
  double accuracy() const;
  // Each row divided by its total (rejections included in the total).
  std::vector<std::vector<double>> row_normalized() const;
  double diagonal_mean() const;

  const std::vector<std::string>& labels() const { return labels_; }

  // Fixed-width table: row-normalized percentages, one row per true class.
  std::string to_table() const;
  std::string to_json() const;

 private:
  std::vector<std::string> labels_;
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> rejected_;
};

}  // namespace diverlink

#endif  // DIVERLINK_METRICS_HPP
