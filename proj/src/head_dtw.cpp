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

#include "diverlink/head_dtw.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "diverlink/error.hpp"

namespace diverlink {

namespace {

constexpr const char* kTemplateFormat = "diverlink-templates";
constexpr int kTemplateVersion = 1;

double local_cost(std::span<const double> x, std::span<const double> y, LocalCost cost) {
  double acc = 0.0;
  for (std::size_t c = 0; c < x.size(); ++c) {
    const double d = x[c] - y[c];
    acc += d * d;
  }
  return cost == LocalCost::Euclidean ? std::sqrt(acc) : acc;
}

void check_pair(const Series& a, const Series& b) {
  if (a.empty() || b.empty()) throw ArgumentError("dtw: empty series");
  if (a.channels() != b.channels()) throw ArgumentError("dtw: channel count mismatch");
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

// Aligns every sequence to `avg`; returns the total cost and accumulates the
// per-frame sums and counts of associated frames.
double align_all(const Series& avg, std::span<const Series> seqs, std::vector<double>& sums,
                 std::vector<std::size_t>& counts) {
  const std::size_t ch = avg.channels();
  sums.assign(avg.data().size(), 0.0);
  counts.assign(avg.frames(), 0);
  double total = 0.0;
  for (const auto& s : seqs) {
    const DtwResult r = dtw(avg, s, LocalCost::SquaredEuclidean);
    total += r.distance;
    for (auto [i, j] : r.path) {
      const auto f = s.frame(j);
      for (std::size_t c = 0; c < ch; ++c) sums[i * ch + c] += f[c];
      ++counts[i];
    }
  }
  return total;
}

}  // namespace

std::string_view to_string(HeadMotionClass c) {
  switch (c) {
    case HeadMotionClass::BendLeft: return "BendLeft";
    case HeadMotionClass::BendRight: return "BendRight";
    case HeadMotionClass::Extension: return "Extension";
    case HeadMotionClass::Flexion: return "Flexion";
    case HeadMotionClass::RotateLeft: return "RotateLeft";
    case HeadMotionClass::RotateRight: return "RotateRight";
  }
  return "?";
}

std::optional<HeadMotionClass> parse_head_motion(std::string_view name) {
  for (auto c : kHeadMotionClasses) {
    if (to_string(c) == name) return c;
  }
  static const std::map<std::string_view, HeadMotionClass> aliases = {
      {"left bending", HeadMotionClass::BendLeft},   {"right bending", HeadMotionClass::BendRight},
      {"extension", HeadMotionClass::Extension},     {"flexion", HeadMotionClass::Flexion},
      {"left rotation", HeadMotionClass::RotateLeft}, {"right rotation", HeadMotionClass::RotateRight},
  };
  if (auto it = aliases.find(name); it != aliases.end()) return it->second;
  return std::nullopt;
}

int command_index(HeadMotionClass c) {
  switch (c) {
    case HeadMotionClass::BendRight: return 1;
    case HeadMotionClass::BendLeft: return 2;
    case HeadMotionClass::Extension: return 3;
    case HeadMotionClass::Flexion: return 4;
    case HeadMotionClass::RotateLeft: return 5;
    case HeadMotionClass::RotateRight: return 6;
  }
  return 0;
}

int governing_channel(HeadMotionClass c) {
  switch (c) {
    case HeadMotionClass::BendLeft:
    case HeadMotionClass::BendRight: return 0;
    case HeadMotionClass::Extension:
    case HeadMotionClass::Flexion: return 1;
    case HeadMotionClass::RotateLeft:
    case HeadMotionClass::RotateRight: return 2;
  }
  return 0;
}

Series::Series(std::size_t channels, std::vector<double> data)
    : channels_(channels), data_(std::move(data)) {
  if (channels_ == 0 || data_.size() % channels_ != 0) {
    throw ArgumentError("series data size is not a multiple of the channel count");
  }
}

Series Series::scalar(std::span<const double> values) {
  return Series(1, std::vector<double>(values.begin(), values.end()));
}

void Series::push_frame(std::span<const double> values) {
  if (values.size() != channels_) throw ArgumentError("frame has wrong channel count");
  data_.insert(data_.end(), values.begin(), values.end());
}

Series imu_series(std::span<const ImuSample> samples) {
  Series s(6);
  s.data().reserve(samples.size() * 6);
  for (const auto& x : samples) {
    const std::array<double, 6> f = {x.accel[0], x.accel[1], x.accel[2],
                                     x.euler[0], x.euler[1], x.euler[2]};
    s.push_frame(f);
  }
  return s;
}

Series resample_linear(const Series& s, std::size_t length) {
  if (s.empty() || length == 0) throw ArgumentError("resample: empty input or target length");
  const std::size_t n = s.frames();
  const std::size_t ch = s.channels();
  if (n == length) return s;
  Series out(ch);
  out.data().resize(length * ch);
  for (std::size_t k = 0; k < length; ++k) {
    const double pos = length == 1 ? 0.0
                                   : static_cast<double>(k) * static_cast<double>(n - 1) /
                                         static_cast<double>(length - 1);
    const auto lo = std::min(static_cast<std::size_t>(std::floor(pos)), n - 1);
    const auto hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    for (std::size_t c = 0; c < ch; ++c) {
      out.data()[k * ch + c] = s.at(lo, c) + frac * (s.at(hi, c) - s.at(lo, c));
    }
  }
  return out;
}

DtwResult dtw(const Series& a, const Series& b, LocalCost cost) {
  check_pair(a, b);
  const std::size_t n = a.frames();
  const std::size_t m = b.frames();
  std::vector<double> acc(n * m);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return acc[i * m + j]; };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = local_cost(a.frame(i), b.frame(j), cost);
      if (i == 0 && j == 0) {
        at(i, j) = d;
      } else if (i == 0) {
        at(i, j) = d + at(i, j - 1);
      } else if (j == 0) {
        at(i, j) = d + at(i - 1, j);
      } else {
        at(i, j) = d + std::min({at(i - 1, j - 1), at(i - 1, j), at(i, j - 1)});
      }
    }
  }

  DtwResult r;
  r.distance = at(n - 1, m - 1);
  std::size_t i = n - 1, j = m - 1;
  r.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      const double diag = at(i - 1, j - 1);
      const double up = at(i - 1, j);
      const double left = at(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    }
    r.path.emplace_back(i, j);
  }
  std::reverse(r.path.begin(), r.path.end());
  return r;
}

double dtw_distance(const Series& a, const Series& b, LocalCost cost) {
  check_pair(a, b);
  // Keep the shorter series along the rolling row.
  const Series& rows = a.frames() >= b.frames() ? a : b;
  const Series& cols = a.frames() >= b.frames() ? b : a;
  const std::size_t n = rows.frames();
  const std::size_t m = cols.frames();
  std::vector<double> prev(m), cur(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = local_cost(rows.frame(i), cols.frame(j), cost);
      if (i == 0 && j == 0) {
        cur[j] = d;
      } else if (i == 0) {
        cur[j] = d + cur[j - 1];
      } else if (j == 0) {
        cur[j] = d + prev[j];
      } else {
        cur[j] = d + std::min({prev[j - 1], prev[j], cur[j - 1]});
      }
    }
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

std::size_t dtw_medoid(std::span<const Series> sequences, LocalCost cost) {
  if (sequences.empty()) throw ArgumentError("medoid of an empty set");
  const std::size_t n = sequences.size();
  std::vector<double> total(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = dtw_distance(sequences[i], sequences[j], cost);
      total[i] += d;
      total[j] += d;
    }
  }
  return static_cast<std::size_t>(std::min_element(total.begin(), total.end()) - total.begin());
}

DbaResult dba_average(std::span<const Series> sequences, const Series& init, const DbaOptions& opts) {
  if (sequences.empty()) throw ArgumentError("dba: empty sequence set");
  if (init.empty()) throw ArgumentError("dba: empty initial average");
  for (const auto& s : sequences) check_pair(init, s);

  DbaResult r;
  r.average = init;
  std::vector<double> sums;
  std::vector<std::size_t> counts;
  double cost = align_all(r.average, sequences, sums, counts);
  r.costs.push_back(cost);

  const std::size_t ch = init.channels();
  for (std::size_t it = 0; it < opts.max_iters && cost > 0.0; ++it) {
    Series next(ch);
    next.data().resize(sums.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
      for (std::size_t c = 0; c < ch; ++c) {
        next.data()[i * ch + c] = sums[i * ch + c] / static_cast<double>(counts[i]);
      }
    }
    const double next_cost = align_all(next, sequences, sums, counts);
    r.average = std::move(next);
    r.costs.push_back(next_cost);
    const double improvement = cost - next_cost;
    cost = next_cost;
    if (improvement < opts.tolerance * r.costs[r.costs.size() - 2]) break;
  }
  return r;
}

DbaResult dba_average(std::span<const Series> sequences, const DbaOptions& opts) {
  if (sequences.empty()) throw ArgumentError("dba: empty sequence set");
  const std::size_t medoid = dtw_medoid(sequences, LocalCost::SquaredEuclidean);
  return dba_average(sequences, sequences[medoid], opts);
}

ChannelStats ChannelStats::fit(std::span<const Series> sequences) {
  if (sequences.empty()) throw ArgumentError("channel stats need at least one series");
  const std::size_t ch = sequences.front().channels();
  ChannelStats st;
  st.mean.assign(ch, 0.0);
  st.stddev.assign(ch, 0.0);
  std::size_t n = 0;
  for (const auto& s : sequences) {
    if (s.channels() != ch) throw ArgumentError("channel count mismatch in training set");
    for (std::size_t f = 0; f < s.frames(); ++f) {
      for (std::size_t c = 0; c < ch; ++c) st.mean[c] += s.at(f, c);
    }
    n += s.frames();
  }
  if (n == 0) throw ArgumentError("channel stats need at least one frame");
  for (auto& m : st.mean) m /= static_cast<double>(n);
  for (const auto& s : sequences) {
    for (std::size_t f = 0; f < s.frames(); ++f) {
      for (std::size_t c = 0; c < ch; ++c) {
        const double d = s.at(f, c) - st.mean[c];
        st.stddev[c] += d * d;
      }
    }
  }
  for (auto& v : st.stddev) {
    v = std::sqrt(v / static_cast<double>(n));
    if (!(v > 1e-12)) v = 1.0;
  }
  return st;
}

Series ChannelStats::normalize(const Series& s) const {
  if (s.channels() != mean.size()) throw ArgumentError("normalize: channel count mismatch");
  Series out = s;
  const std::size_t ch = s.channels();
  for (std::size_t k = 0; k < out.data().size(); ++k) {
    out.data()[k] = (out.data()[k] - mean[k % ch]) / stddev[k % ch];
  }
  return out;
}

Series ChannelStats::denormalize(const Series& s) const {
  if (s.channels() != mean.size()) throw ArgumentError("denormalize: channel count mismatch");
  Series out = s;
  const std::size_t ch = s.channels();
  for (std::size_t k = 0; k < out.data().size(); ++k) {
    out.data()[k] = out.data()[k] * stddev[k % ch] + mean[k % ch];
  }
  return out;
}

TemplateSet::TemplateSet(std::array<MotionTemplate, 6> templates, ChannelStats stats, double rate)
    : templates_(std::move(templates)), stats_(std::move(stats)), rate_(rate) {
  for (std::size_t k = 0; k < templates_.size(); ++k) {
    if (templates_[k].cls != kHeadMotionClasses[k]) throw ArgumentError("templates out of class order");
    normalized_[k] = stats_.normalize(templates_[k].sequence);
  }
}

std::string TemplateSet::to_json() const {
  nlohmann::json j;
  j["format"] = kTemplateFormat;
  j["version"] = kTemplateVersion;
  j["rate"] = rate_;
  j["channels"] = stats_.mean.size();
  j["channel_names"] = {"ax", "ay", "az", "roll", "pitch", "yaw"};
  j["stats"] = {{"mean", stats_.mean}, {"std", stats_.stddev}};
  j["templates"] = nlohmann::json::array();
  for (const auto& t : templates_) {
    j["templates"].push_back({{"class", to_string(t.cls)},
                              {"support", t.support_count},
                              {"reject_threshold", t.reject_threshold},
                              {"frames", t.sequence.frames()},
                              {"data", t.sequence.data()}});
  }
  return j.dump();
}

TemplateSet TemplateSet::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw UnsupportedFormatError(std::string("template file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format") != kTemplateFormat) throw UnsupportedFormatError("not a template file");
    if (j.at("version").get<int>() != kTemplateVersion) {
      throw UnsupportedFormatError("unsupported template version");
    }
    ChannelStats st;
    st.mean = j.at("stats").at("mean").get<std::vector<double>>();
    st.stddev = j.at("stats").at("std").get<std::vector<double>>();
    const auto ch = j.at("channels").get<std::size_t>();
    if (st.mean.size() != ch || st.stddev.size() != ch) throw UnsupportedFormatError("bad stats");
    std::array<MotionTemplate, 6> ts{};
    std::array<bool, 6> seen{};
    for (const auto& jt : j.at("templates")) {
      auto cls = parse_head_motion(jt.at("class").get<std::string>());
      if (!cls) throw UnsupportedFormatError("unknown template class");
      const auto k = static_cast<std::size_t>(*cls);
      MotionTemplate& t = ts[k];
      t.cls = *cls;
      t.support_count = jt.at("support").get<std::size_t>();
      t.reject_threshold = jt.at("reject_threshold").get<double>();
      t.sequence = Series(ch, jt.at("data").get<std::vector<double>>());
      if (t.sequence.frames() != jt.at("frames").get<std::size_t>()) {
        throw UnsupportedFormatError("frame count mismatch");
      }
      seen[k] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      throw UnsupportedFormatError("template file lacks a class");
    }
    return TemplateSet(std::move(ts), std::move(st), j.at("rate").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw UnsupportedFormatError(std::string("malformed template file: ") + e.what());
  }
}

void TemplateSet::save(const std::filesystem::path& path) const {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << to_json() << '\n';
  if (!f) throw IoError("write failed for " + path.string());
}

TemplateSet TemplateSet::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return from_json(ss.str());
}

TemplateSet build_templates(std::span<const LabeledSeries> labeled, const TemplateOptions& opts) {
  std::array<std::vector<Series>, 6> by_class;
  std::vector<Series> all;
  for (const auto& ls : labeled) {
    by_class[static_cast<std::size_t>(ls.label)].push_back(ls.series);
    all.push_back(ls.series);
  }
  std::string missing;
  for (auto c : kHeadMotionClasses) {
    if (by_class[static_cast<std::size_t>(c)].empty()) {
      missing += missing.empty() ? "" : ", ";
      missing += to_string(c);
    }
  }
  if (!missing.empty()) throw TrainingError("no training sequences for: " + missing);

  const ChannelStats stats = ChannelStats::fit(all);
  std::array<MotionTemplate, 6> templates{};
  for (auto c : kHeadMotionClasses) {
    const auto& seqs = by_class[static_cast<std::size_t>(c)];
    std::vector<std::size_t> lengths;
    for (const auto& s : seqs) lengths.push_back(s.frames());
    std::nth_element(lengths.begin(), lengths.begin() + static_cast<std::ptrdiff_t>((lengths.size() - 1) / 2),
                     lengths.end());
    const std::size_t median_len = lengths[(lengths.size() - 1) / 2];

    std::vector<Series> normalized;
    normalized.reserve(seqs.size());
    for (const auto& s : seqs) normalized.push_back(stats.normalize(resample_linear(s, median_len)));
    const DbaResult avg = dba_average(normalized, opts.dba);

    MotionTemplate& t = templates[static_cast<std::size_t>(c)];
    t.cls = c;
    t.support_count = seqs.size();
    t.sequence = seqs.size() == 1 ? resample_linear(seqs.front(), median_len)
                                  : stats.denormalize(avg.average);

    const Series norm_template = stats.normalize(t.sequence);
    std::vector<double> within;
    within.reserve(seqs.size());
    for (const auto& s : seqs) within.push_back(dtw_distance(stats.normalize(s), norm_template));
    t.reject_threshold = opts.reject_scale * percentile(within, opts.reject_percentile);
  }
  return TemplateSet(std::move(templates), stats, opts.rate);
}

NearestTemplate nearest_template(const Series& segment, std::span<const Series, 6> templates) {
  NearestTemplate best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < templates.size(); ++k) {
    best.distances[k] = dtw_distance(segment, templates[k]);
    if (best.distances[k] < best.distance) {
      best.distance = best.distances[k];
      best.index = k;
    }
  }
  return best;
}

HeadClassification classify_series(const Series& raw, const TemplateSet& templates) {
  if (raw.empty()) throw ArgumentError("classify: empty segment");
  const NearestTemplate nt = nearest_template(templates.stats().normalize(raw), templates.normalized());
  HeadClassification out;
  out.nearest = kHeadMotionClasses[nt.index];
  out.distance = nt.distance;
  const std::size_t euler_ch = 3 + static_cast<std::size_t>(governing_channel(out.nearest));
  for (std::size_t f = 0; f < raw.frames(); ++f) {
    out.peak_angle = std::max(out.peak_angle, std::abs(raw.at(f, euler_ch)));
  }
  if (nt.distance <= templates.get(out.nearest).reject_threshold) out.cls = out.nearest;
  return out;
}

HeadClassification classify_head(const MotionSegment& segment, const TemplateSet& templates) {
  return classify_series(imu_series(segment.samples), templates);
}

}  // namespace diverlink
