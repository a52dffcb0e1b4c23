#include "seqls/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "seqls/normal.hpp"

namespace seqls {

struct Environment::LabelModel {
  // Linear model: argmax over anchor rows. Empty for file-backed envs.
  Eigen::MatrixXd anchors;
  // File-backed model: training rows and their labels.
  Eigen::MatrixXd rows;
  std::vector<int> row_labels;
  std::map<std::vector<double>, int> exact;

  bool linear() const { return anchors.size() > 0; }
};

DriftSchedule DriftSchedule::linear(Eigen::VectorXd step, int horizon) {
  if (horizon < 0) throw std::invalid_argument("DriftSchedule::linear: negative horizon");
  std::vector<Eigen::VectorXd> shifts;
  shifts.reserve(horizon);
  for (int k = 0; k < horizon; ++k) shifts.push_back(static_cast<double>(k) * step);
  return from_shifts(std::move(shifts));
}

DriftSchedule DriftSchedule::from_shifts(std::vector<Eigen::VectorXd> shifts) {
  DriftSchedule s;
  s.bounded_ = true;
  s.shifts_ = std::move(shifts);
  return s;
}

Eigen::VectorXd DriftSchedule::shift(int round, int dim) const {
  if (round < 0) throw std::out_of_range("drift schedule: negative round");
  if (!bounded_) return Eigen::VectorXd::Zero(dim);
  if (round >= static_cast<int>(shifts_.size())) {
    throw std::out_of_range("drift schedule: round " + std::to_string(round) +
                            " outside [0, " + std::to_string(shifts_.size()) + ")");
  }
  const Eigen::VectorXd& s = shifts_[round];
  if (s.size() != dim) throw std::invalid_argument("drift schedule: dimension mismatch");
  return s;
}

int Environment::optimal_action(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw std::invalid_argument("optimal_action: dimension mismatch");
  if (labels_->linear()) {
    const Eigen::VectorXd s = labels_->anchors * x;
    int best = 0;
    for (int a = 1; a < s.size(); ++a) {
      if (s[a] > s[best]) best = a;
    }
    return best;
  }
  const std::vector<double> key(x.data(), x.data() + x.size());
  if (auto it = labels_->exact.find(key); it != labels_->exact.end()) return it->second;
  // Unseen context (e.g. drifted): nearest training row.
  Eigen::Index nearest = 0;
  (labels_->rows.rowwise() - x.transpose()).rowwise().squaredNorm().minCoeff(&nearest);
  return labels_->row_labels[nearest];
}

Eigen::VectorXd Environment::sample_context(std::mt19937_64& rng, int round) const {
  Eigen::VectorXd x(dim_);
  if (labels_->linear()) {
    std::normal_distribution<double> normal;
    for (int i = 0; i < dim_; ++i) x[i] = normal(rng);
  } else {
    std::uniform_int_distribution<Eigen::Index> pick(0, labels_->rows.rows() - 1);
    x = labels_->rows.row(pick(rng)).transpose();
  }
  if (!drift_.is_identity()) x += drift_.shift(round, dim_);
  return x;
}

const Eigen::MatrixXd& Environment::anchors() const { return labels_->anchors; }

Environment make_synthetic_env(int d, int k, double eps, std::uint64_t seed, int num_eval) {
  if (d < 1) throw std::invalid_argument("make_synthetic_env: d must be >= 1");
  if (k < 2) throw std::invalid_argument("make_synthetic_env: K must be >= 2");
  if (!(eps >= 0.0 && eps < 0.5)) {
    throw std::invalid_argument("make_synthetic_env: eps must lie in [0, 0.5)");
  }
  if (num_eval < 1) throw std::invalid_argument("make_synthetic_env: num_eval must be >= 1");

  std::mt19937_64 rng(derive_seed(seed, 0xA11C0125));
  std::normal_distribution<double> normal;
  auto model = std::make_shared<Environment::LabelModel>();
  model->anchors.resize(k, d);
  for (int a = 0; a < k; ++a) {
    double norm = 0.0;
    while (norm < 1e-12) {
      for (int i = 0; i < d; ++i) model->anchors(a, i) = normal(rng);
      norm = model->anchors.row(a).norm();
    }
    model->anchors.row(a) /= norm;
  }

  Environment env;
  env.dim_ = d;
  env.num_actions_ = k;
  env.eps_ = eps;
  env.labels_ = std::move(model);

  std::mt19937_64 eval_rng(derive_seed(seed, 0xE7A1));
  env.eval_contexts_.resize(num_eval, d);
  env.eval_optimal_.resize(num_eval);
  for (int n = 0; n < num_eval; ++n) {
    const Eigen::VectorXd x = env.sample_context(eval_rng);
    env.eval_contexts_.row(n) = x.transpose();
    env.eval_optimal_[n] = env.optimal_action(x);
  }
  return env;
}

double sample_cost(const Environment& env, const Eigen::VectorXd& x, int a, std::mt19937_64& rng) {
  const double p = -expected_cost(env, x, a);
  std::bernoulli_distribution fire(p);
  return fire(rng) ? -1.0 : 0.0;
}

double expected_cost(const Environment& env, const Eigen::VectorXd& x, int a) {
  if (a < 0 || a >= env.num_actions()) throw std::out_of_range("expected_cost: action out of range");
  return expected_cost_given_optimal(env.noise(), env.optimal_action(x), a);
}

double true_risk(const Environment& env, const Eigen::MatrixXd& propensities, double tol) {
  if (propensities.rows() != env.num_eval() || propensities.cols() != env.num_actions()) {
    throw std::invalid_argument("true_risk: propensity table must be num_eval x K");
  }
  const auto optimal = env.eval_optimal_actions();
  double total = 0.0;
  for (int n = 0; n < env.num_eval(); ++n) {
    const double row_sum = propensities.row(n).sum();
    if (std::abs(row_sum - 1.0) > tol) {
      std::ostringstream msg;
      msg << "true_risk: propensities of eval context " << n << " sum to " << row_sum;
      throw std::invalid_argument(msg.str());
    }
    double r = 0.0;
    for (int a = 0; a < env.num_actions(); ++a) {
      r += propensities(n, a) * expected_cost_given_optimal(env.noise(), optimal[n], a);
    }
    total += r;
  }
  return total / env.num_eval();
}

double true_risk_from_optimal_mass(const Environment& env, std::span<const double> optimal_mass) {
  if (static_cast<int>(optimal_mass.size()) != env.num_eval()) {
    throw std::invalid_argument("true_risk_from_optimal_mass: one value per eval context");
  }
  const double eps = env.noise();
  const double mean = std::accumulate(optimal_mass.begin(), optimal_mass.end(), 0.0) /
                      static_cast<double>(optimal_mass.size());
  return -eps - (1.0 - 2.0 * eps) * mean;
}

Environment drift_context_sampler(const Environment& env, DriftSchedule schedule) {
  Environment out = env;
  out.drift_ = std::move(schedule);
  return out;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  auto malformed = [&] {
    return std::runtime_error("line " + std::to_string(line_no) + ": malformed number '" + s + "'");
  };
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw malformed();
  }
  while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
  if (used != s.size()) throw malformed();
  return v;
}

}  // namespace

Environment load_feature_label_env(const std::filesystem::path& path, double eps, int num_actions,
                                   double eval_fraction, std::uint64_t split_seed) {
  if (!(eps >= 0.0 && eps < 0.5)) {
    throw std::invalid_argument("load_feature_label_env: eps must lie in [0, 0.5)");
  }
  if (!(eval_fraction >= 0.0 && eval_fraction < 1.0)) {
    throw std::invalid_argument("load_feature_label_env: eval_fraction must lie in [0, 1)");
  }
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_feature_label_env: cannot open " + path.string());

  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  int dim = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto fields = split_csv(line);
    if (fields.size() < 2) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": need features and a label");
    }
    if (dim < 0) dim = static_cast<int>(fields.size()) - 1;
    if (static_cast<int>(fields.size()) - 1 != dim) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                               std::to_string(dim) + " features");
    }
    std::vector<double> row(dim);
    for (int i = 0; i < dim; ++i) row[i] = parse_double(fields[i], line_no);
    const double label = parse_double(fields.back(), line_no);
    if (label != std::floor(label) || label < 0 ||
        (num_actions > 0 && label >= num_actions)) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": label out of range");
    }
    features.push_back(std::move(row));
    labels.push_back(static_cast<int>(label));
  }
  if (features.empty()) throw std::runtime_error("load_feature_label_env: empty file");

  const int k = num_actions > 0 ? num_actions
                                : std::max(2, *std::max_element(labels.begin(), labels.end()) + 1);
  const auto n = static_cast<int>(features.size());
  const int n_eval = static_cast<int>(std::ceil(eval_fraction * n - 1e-12));

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(split_seed, 0x5711));
  std::shuffle(order.begin(), order.end(), rng);

  const int n_train = std::max(1, n - n_eval);
  auto model = std::make_shared<Environment::LabelModel>();
  model->rows.resize(n_train, dim);
  model->row_labels.resize(n_train);
  for (int r = 0; r < n_train; ++r) {
    const int src = order[r];
    model->rows.row(r) = Eigen::Map<const Eigen::RowVectorXd>(features[src].data(), dim);
    model->row_labels[r] = labels[src];
  }
  for (int src = 0; src < n; ++src) model->exact.emplace(features[src], labels[src]);

  Environment env;
  env.dim_ = dim;
  env.num_actions_ = k;
  env.eps_ = eps;
  env.labels_ = std::move(model);

  // Without room for a held-out split (or with eval_fraction = 0) the oracles
  // evaluate on the training rows.
  const bool held_out = n_eval > 0 && n - n_eval >= 1;
  const int eval_rows = held_out ? n_eval : n_train;
  env.eval_contexts_.resize(eval_rows, dim);
  env.eval_optimal_.resize(eval_rows);
  for (int r = 0; r < eval_rows; ++r) {
    const int src = held_out ? order[n - n_eval + r] : order[r];
    env.eval_contexts_.row(r) = Eigen::Map<const Eigen::RowVectorXd>(features[src].data(), dim);
    env.eval_optimal_[r] = labels[src];
  }
  return env;
}

void write_feature_label_file(const std::filesystem::path& path, const Eigen::MatrixXd& features,
                              std::span<const int> labels) {
  if (features.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw std::invalid_argument("write_feature_label_file: one label per row");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_feature_label_file: cannot open " + path.string());
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    for (Eigen::Index c = 0; c < features.cols(); ++c) out << features(r, c) << ',';
    out << labels[r] << '\n';
  }
}

void write_log_dump(std::ostream& out, std::span<const LoggedInteraction> records) {
  const Eigen::Index d = records.empty() ? 0 : records.front().context.size();
  out << "round,action,cost,logged_propensity";
  for (Eigen::Index i = 0; i < d; ++i) out << ",x" << i;
  out << '\n' << std::setprecision(17);
  for (const auto& r : records) {
    if (r.context.size() != d) throw std::invalid_argument("write_log_dump: ragged contexts");
    out << r.round << ',' << r.action << ',' << r.cost << ',' << r.logged_propensity;
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << r.context[i];
    out << '\n';
  }
}

std::vector<LoggedInteraction> read_log_dump(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("round,action,cost,logged_propensity", 0) != 0) {
    throw std::runtime_error("read_log_dump: missing header row");
  }
  const auto header = split_csv(line);
  const auto d = static_cast<Eigen::Index>(header.size()) - 4;
  std::vector<LoggedInteraction> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (static_cast<Eigen::Index>(f.size()) != d + 4) {
      throw std::runtime_error("read_log_dump: line " + std::to_string(line_no) +
                               " has wrong column count");
    }
    LoggedInteraction r;
    r.round = static_cast<int>(parse_double(f[0], line_no));
    r.action = static_cast<int>(parse_double(f[1], line_no));
    r.cost = parse_double(f[2], line_no);
    r.logged_propensity = parse_double(f[3], line_no);
    r.context.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) r.context[i] = parse_double(f[4 + i], line_no);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace seqls
