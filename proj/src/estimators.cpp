#include "seqls/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace seqls {

RegularizerSpec RegularizerSpec::clipped_ips(double max_weight) {
  if (!(max_weight >= 1.0)) throw std::invalid_argument("clipped_ips: M must be >= 1");
  return {RegularizerKind::clipped_ips, max_weight};
}

RegularizerSpec RegularizerSpec::ls(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("ls: lambda must be > 0");
  return {RegularizerKind::ls, lambda};
}

RegularizerSpec RegularizerSpec::adj_ls(double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("adj_ls: lambda must lie in (0, 1)");
  return {RegularizerKind::adj_ls, lambda};
}

double RegularizerSpec::lambda() const {
  if (kind_ != RegularizerKind::ls && kind_ != RegularizerKind::adj_ls) {
    throw std::logic_error("regularizer has no lambda");
  }
  return param_;
}

double h_value(const RegularizerSpec& spec, double p, double q, double c) {
  if (!(q > 0.0)) throw std::invalid_argument("h_value: logged propensity must be > 0");
  switch (spec.kind()) {
    case RegularizerKind::ips:
      return p * c / q;
    case RegularizerKind::clipped_ips:
      return c / q >= -spec.parameter() ? p * c / q : -p * spec.parameter();
    case RegularizerKind::ls: {
      const double lambda = spec.parameter();
      return -(p / lambda) * std::log1p(-lambda * c / q);
    }
    case RegularizerKind::adj_ls: {
      const double lambda = spec.parameter();
      const double shrink = 1.0 + lambda * c;
      if (!(shrink > 0.0)) throw std::invalid_argument("h_value: adj_ls needs 1 + lambda c > 0");
      return -(p / lambda) * std::log1p(-lambda * c / (q * shrink));
    }
  }
  throw std::logic_error("h_value: unknown regularizer");
}

void LogDataset::append_round(std::vector<LoggedInteraction> batch) {
  const int round = num_rounds();
  for (const auto& r : batch) {
    if (r.round != round) {
      throw std::invalid_argument("LogDataset: record of round " + std::to_string(r.round) +
                                  " appended as round " + std::to_string(round));
    }
    if (!(r.logged_propensity > 0.0)) {
      throw std::invalid_argument("LogDataset: logged propensity must be > 0");
    }
  }
  round_offsets_.push_back(records_.size());
  round_sizes_.push_back(batch.size());
  records_.insert(records_.end(), std::make_move_iterator(batch.begin()),
                  std::make_move_iterator(batch.end()));
}

LogDataset LogDataset::from_records(std::vector<LoggedInteraction> records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const auto& a, const auto& b) { return a.round < b.round; });
  LogDataset out;
  std::size_t i = 0;
  while (i < records.size()) {
    const int round = records[i].round;
    if (round != out.num_rounds()) {
      throw std::invalid_argument("LogDataset: rounds must be contiguous from 0");
    }
    std::vector<LoggedInteraction> batch;
    while (i < records.size() && records[i].round == round) batch.push_back(std::move(records[i++]));
    out.append_round(std::move(batch));
  }
  return out;
}

std::size_t LogDataset::cumulative_size(int j) const {
  if (j < 0 || j >= num_rounds()) throw std::out_of_range("LogDataset: round out of range");
  return round_offsets_[j] + round_sizes_[j];
}

std::span<const LoggedInteraction> LogDataset::round(int j) const {
  return std::span<const LoggedInteraction>(records_).subspan(round_offset(j), round_size(j));
}

double empirical_risk(const RegularizerSpec& spec, std::span<const LoggedInteraction> records,
                      std::span<const double> target_propensities) {
  if (records.empty()) throw std::invalid_argument("empirical_risk: empty dataset");
  if (target_propensities.size() != records.size()) {
    throw std::invalid_argument("empirical_risk: need one target propensity per interaction");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    total += h_value(spec, target_propensities[i], records[i].logged_propensity, records[i].cost);
  }
  return total / static_cast<double>(records.size());
}

double empirical_risk(const RegularizerSpec& spec, const LogDataset& dataset,
                      std::span<const double> target_propensities) {
  return empirical_risk(spec, dataset.records(), target_propensities);
}

double c_hat_term(const LogDataset& dataset, double lambda) {
  if (dataset.empty()) throw std::invalid_argument("c_hat_term: empty dataset");
  if (!(lambda > 0.0)) throw std::invalid_argument("c_hat_term: lambda must be > 0");
  double total = 0.0;
  for (const auto& r : dataset.records()) {
    const double shrink = 1.0 + lambda * r.cost;
    if (!(shrink > 0.0)) throw std::invalid_argument("c_hat_term: 1 + lambda c must be > 0");
    total += -std::log1p(lambda * r.cost) / lambda;
  }
  return total / static_cast<double>(dataset.size());
}

}  // namespace seqls
