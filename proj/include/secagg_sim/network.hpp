/*
 * Copyright 2026 The secagg-sim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "secagg_sim/errors.hpp"
#include "secagg_sim/random.hpp"

namespace secagg_sim {

using Nanoseconds = std::int64_t;

inline constexpr Nanoseconds kMillisecond = 1'000'000;
inline constexpr Nanoseconds kSecond = 1'000'000'000;
inline constexpr double kEarthRadiusMeters = 6'371'000.0;
// Light in optical fiber, roughly 2/3 of c.
inline constexpr double kFiberMetersPerSecond = 2.0e8;

struct EndpointSample {
  double latitude = 0.0;   // degrees
  double longitude = 0.0;  // degrees
  Nanoseconds last_mile = 0;
};

// Great-circle distance in meters (haversine).
inline double GeodesicMeters(const EndpointSample& a, const EndpointSample& b) {
  constexpr double kDeg = M_PI / 180.0;
  const double phi1 = a.latitude * kDeg;
  const double phi2 = b.latitude * kDeg;
  const double dphi = phi2 - phi1;
  const double dlambda = (b.longitude - a.longitude) * kDeg;
  const double h = std::sin(dphi / 2) * std::sin(dphi / 2) +
                   std::cos(phi1) * std::cos(phi2) * std::sin(dlambda / 2) *
                       std::sin(dlambda / 2);
  return 2.0 * kEarthRadiusMeters * std::asin(std::min(1.0, std::sqrt(h)));
}

inline Nanoseconds PropagationDelay(double meters) {
  return static_cast<Nanoseconds>(std::llround(meters / kFiberMetersPerSecond * 1e9));
}

// Additive, non-negative per-message jitter.
struct NoiseModel {
  enum class Kind { kNone, kLognormal, kRelativeLognormal };

  Kind kind = Kind::kNone;
  // kLognormal: median jitter in ns. kRelativeLognormal: median jitter as a
  // fraction of the base delay.
  double scale = 0.0;
  double sigma = 0.0;

  static NoiseModel None() { return {}; }
  static NoiseModel Lognormal(double median_ns, double sigma) {
    return {Kind::kLognormal, median_ns, sigma};
  }
  static NoiseModel RelativeLognormal(double median_fraction, double sigma) {
    return {Kind::kRelativeLognormal, median_fraction, sigma};
  }
  // sigma = 0.5 and a median of 6.25% of base: the 99th percentile
  // (z = 2.326) adds 0.0625 * e^(0.5 * 2.326) = 0.2 of the base delay.
  static NoiseModel Default() { return RelativeLognormal(0.0625, 0.5); }

  double Mean(Nanoseconds base) const {
    const double m = std::exp(sigma * sigma / 2.0);
    switch (kind) {
      case Kind::kNone: return 0.0;
      case Kind::kLognormal: return scale * m;
      case Kind::kRelativeLognormal: return scale * static_cast<double>(base) * m;
    }
    return 0.0;
  }

  Nanoseconds Sample(Nanoseconds base, SeededRng& rng) const {
    if (kind == Kind::kNone) return 0;
    const double factor = std::exp(sigma * rng.StandardNormal());
    const double median =
        kind == Kind::kLognormal ? scale : scale * static_cast<double>(base);
    return static_cast<Nanoseconds>(std::llround(median * factor));
  }
};

// Minimum one-way delays between all n + 1 parties (index 0 is the server).
// Geographic matrices keep only the per-party endpoints and compute entries
// on demand, so a 10k-client model does not need a 10^8-entry table.
class LatencyMatrix {
 public:
  static LatencyMatrix Constant(std::size_t n_clients, Nanoseconds one_way) {
    if (one_way < 0) throw Error(ErrorCode::kInvalidParams, "negative latency");
    return LatencyMatrix(n_clients, ConstantDelays{one_way}, NoiseModel::None());
  }

  static LatencyMatrix Dense(std::size_t n_clients, std::vector<Nanoseconds> delays,
                             NoiseModel noise = NoiseModel::None()) {
    const std::size_t size = n_clients + 1;
    if (delays.size() != size * size) {
      throw Error(ErrorCode::kDimensionMismatch, "latency table is not (n+1)^2");
    }
    for (std::size_t i = 0; i < size; ++i) {
      for (std::size_t j = 0; j < size; ++j) {
        const Nanoseconds d = delays[i * size + j];
        if (d < 0 || (i == j && d != 0)) {
          throw Error(ErrorCode::kInvalidParams,
                      "delays must be >= 0 with a zero diagonal");
        }
      }
    }
    return LatencyMatrix(n_clients, DenseDelays{std::move(delays)}, noise);
  }

  // Assigns each client a dataset sample (with replacement); the delay
  // between two parties is both last-mile latencies plus fiber propagation
  // over the great-circle distance.
  static LatencyMatrix Empirical(const std::vector<EndpointSample>& samples,
                                 std::size_t n_clients, SeededRng& rng,
                                 const EndpointSample& server,
                                 NoiseModel noise = NoiseModel::Default()) {
    if (samples.empty()) throw Error(ErrorCode::kEmptyDataset, "no samples");
    GeoDelays geo;
    geo.parties.reserve(n_clients + 1);
    geo.parties.push_back(server);
    for (std::size_t i = 0; i < n_clients; ++i) {
      geo.parties.push_back(samples[rng.UniformBelow(samples.size())]);
    }
    return LatencyMatrix(n_clients, std::move(geo), noise);
  }

  std::size_t n_clients() const { return n_clients_; }
  std::size_t size() const { return n_clients_ + 1; }
  const NoiseModel& noise() const { return noise_; }
  void set_noise(NoiseModel noise) { noise_ = noise; }

  Nanoseconds Delay(std::size_t src, std::size_t dst) const {
    if (src == dst) return 0;
    return std::visit(
        [&](const auto& d) -> Nanoseconds {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, ConstantDelays>) {
            return d.one_way;
          } else if constexpr (std::is_same_v<T, DenseDelays>) {
            return d.table[src * size() + dst];
          } else {
            const auto& a = d.parties[src];
            const auto& b = d.parties[dst];
            return a.last_mile + b.last_mile +
                   PropagationDelay(GeodesicMeters(a, b));
          }
        },
        delays_);
  }

  // Base delay plus a noise draw; never below the matrix entry.
  Nanoseconds SampleDelay(std::size_t src, std::size_t dst, SeededRng& rng) const {
    const Nanoseconds base = Delay(src, dst);
    return base + noise_.Sample(base, rng);
  }

  // One CSV row per source party, n + 1 integer columns of nanoseconds.
  void ExportCsv(std::ostream& out) const {
    for (std::size_t i = 0; i < size(); ++i) {
      for (std::size_t j = 0; j < size(); ++j) {
        if (j) out << ',';
        out << Delay(i, j);
      }
      out << '\n';
    }
  }

  static LatencyMatrix ImportCsv(std::istream& in) {
    std::vector<Nanoseconds> values;
    std::size_t rows = 0;
    std::size_t width = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string cell;
      std::size_t cols = 0;
      while (std::getline(ss, cell, ',')) {
        try {
          values.push_back(std::stoll(cell));
        } catch (const std::exception&) {
          throw Error(ErrorCode::kParseError,
                      "line " + std::to_string(line_no) + ": bad delay '" + cell + "'");
        }
        ++cols;
      }
      if (rows++ == 0) width = cols;
      if (cols != width) {
        throw Error(ErrorCode::kParseError,
                    "line " + std::to_string(line_no) + ": ragged row");
      }
    }
    if (rows == 0) throw Error(ErrorCode::kEmptyDataset, "empty latency matrix");
    if (width != rows) throw Error(ErrorCode::kParseError, "matrix is not square");
    return Dense(rows - 1, std::move(values));
  }

 private:
  struct ConstantDelays {
    Nanoseconds one_way;
  };
  struct DenseDelays {
    std::vector<Nanoseconds> table;
  };
  struct GeoDelays {
    std::vector<EndpointSample> parties;
  };
  using Delays = std::variant<ConstantDelays, DenseDelays, GeoDelays>;

  LatencyMatrix(std::size_t n, Delays delays, NoiseModel noise)
      : n_clients_(n), delays_(std::move(delays)), noise_(noise) {}

  std::size_t n_clients_;
  Delays delays_;
  NoiseModel noise_;
};

// Reads a speed-test sample file with header `lat,lon,latency_ms`.
inline std::vector<EndpointSample> LoadEndpointSamples(std::istream& in) {
  std::vector<EndpointSample> samples;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "lat,lon,latency_ms") {
        throw Error(ErrorCode::kParseError,
                    "line 1: expected header 'lat,lon,latency_ms'");
      }
      header_seen = true;
      continue;
    }
    std::stringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') ||
        !std::getline(ss, c)) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": expected 3 columns");
    }
    EndpointSample s;
    try {
      s.latitude = std::stod(a);
      s.longitude = std::stod(b);
      s.last_mile = static_cast<Nanoseconds>(std::llround(std::stod(c) * 1e6));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": not a number");
    }
    if (std::abs(s.latitude) > 90 || std::abs(s.longitude) > 180 ||
        s.last_mile < 0) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": value out of range");
    }
    samples.push_back(s);
  }
  if (samples.empty()) throw Error(ErrorCode::kEmptyDataset, "no samples in dataset");
  return samples;
}

inline std::vector<EndpointSample> LoadEndpointSamples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open " + path);
  return LoadEndpointSamples(in);
}

// Default server placement: a low-latency datacenter (northern Virginia).
inline EndpointSample DefaultServerEndpoint() {
  return EndpointSample{39.04, -77.49, 1 * kMillisecond};
}

}  // namespace secagg_sim
