#pragma once

// Regularized importance-weighted risk estimators h(p, q, c), where p is the
// target propensity, q the logged propensity and c the observed cost in
// [-1, 0]. Every kind is linear in p.

#include <cstddef>
#include <span>
#include <vector>

#include "seqls/env.hpp"

namespace seqls {

enum class RegularizerKind { ips, clipped_ips, ls, adj_ls };

class RegularizerSpec {
 public:
  static RegularizerSpec ips() { return {RegularizerKind::ips, 0.0}; }
  /// p * max(c/q, -M); M >= 1.
  static RegularizerSpec clipped_ips(double max_weight = 10.0);
  /// -(p/lambda) log(1 - lambda c / q); lambda > 0.
  static RegularizerSpec ls(double lambda);
  /// -(p/lambda) log(1 - lambda c / (q (1 + lambda c))); lambda in (0, 1).
  static RegularizerSpec adj_ls(double lambda);

  RegularizerKind kind() const { return kind_; }
  /// lambda for ls/adj_ls, M for clipped_ips, 0 for ips.
  double parameter() const { return param_; }
  double lambda() const;

 private:
  RegularizerSpec(RegularizerKind kind, double param) : kind_(kind), param_(param) {}
  RegularizerKind kind_;
  double param_;
};

/// h(spec, p, q, c) <= 0. Throws std::invalid_argument when q <= 0.
double h_value(const RegularizerSpec& spec, double p, double q, double c);

/// h(spec, 1, q, c) = dh/dp.
inline double h_slope(const RegularizerSpec& spec, double q, double c) { return h_value(spec, 1.0, q, c); }

/// Logged data grouped by round. Rounds are contiguous from 0; records keep
/// their insertion order, and a record's position is its stable id.
class LogDataset {
 public:
  LogDataset() = default;

  /// Appends the next round. Every record must carry round == num_rounds()
  /// and a positive logged propensity.
  void append_round(std::vector<LoggedInteraction> batch);

  /// Rebuilds a dataset from a flat record list (e.g. a log dump).
  static LogDataset from_records(std::vector<LoggedInteraction> records);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  int num_rounds() const { return static_cast<int>(round_sizes_.size()); }
  std::size_t round_size(int j) const { return round_sizes_.at(j); }
  /// N_j = n_0 + ... + n_j.
  std::size_t cumulative_size(int j) const;
  std::span<const std::size_t> round_sizes() const { return round_sizes_; }

  const LoggedInteraction& operator[](std::size_t i) const { return records_[i]; }
  std::span<const LoggedInteraction> records() const { return records_; }
  /// Records of round j.
  std::span<const LoggedInteraction> round(int j) const;
  std::size_t round_offset(int j) const { return round_offsets_.at(j); }

 private:
  std::vector<LoggedInteraction> records_;
  std::vector<std::size_t> round_sizes_;
  std::vector<std::size_t> round_offsets_;
};

/// (1/N) sum_i h(p_i, q_i, c_i) with frozen logged propensities q_i.
double empirical_risk(const RegularizerSpec& spec, const LogDataset& dataset,
                      std::span<const double> target_propensities);

/// Same over a plain record list.
double empirical_risk(const RegularizerSpec& spec, std::span<const LoggedInteraction> records,
                      std::span<const double> target_propensities);

/// (1/N) sum_i (1/lambda) log(1 / (1 + lambda c_i)), policy independent, >= 0.
double c_hat_term(const LogDataset& dataset, double lambda);

}  // namespace seqls
