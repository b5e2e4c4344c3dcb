#include "pips/switch/switch.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <regex>
#include <sstream>

#include "pips/core/errors.hpp"
#include "pips/core/prompts.hpp"
#include "pips/evaluator/judge.hpp"

namespace pips {

namespace {

constexpr std::size_t kChunk = 64;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct Accum {
  double loss = 0.0;
  std::vector<double> grad;  // d weights then bias
  std::vector<double> hess;  // (d+1)^2, row-major

  explicit Accum(std::size_t m, bool with_hessian) : grad(m, 0.0), hess(with_hessian ? m * m : 0, 0.0) {}

  void add(const Accum& other) {
    loss += other.loss;
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += other.grad[i];
    for (std::size_t i = 0; i < hess.size(); ++i) hess[i] += other.hess[i];
  }
};

void accumulate(const SwitchSample& s, const std::vector<double>& theta, Accum& acc) {
  const std::size_t d = theta.size() - 1;
  double z = theta[d];
  for (std::size_t j = 0; j < d; ++j) z += theta[j] * s.features[j];
  acc.loss += s.label ? softplus(-z) : softplus(z);
  const double p = sigmoid(z);
  const double r = p - (s.label ? 1.0 : 0.0);
  for (std::size_t j = 0; j < d; ++j) acc.grad[j] += r * s.features[j];
  acc.grad[d] += r;
  if (acc.hess.empty()) return;
  const double w = p * (1.0 - p);
  const std::size_t m = d + 1;
  for (std::size_t a = 0; a < m; ++a) {
    const double xa = a < d ? s.features[a] : 1.0;
    for (std::size_t b = 0; b <= a; ++b) {
      const double xb = b < d ? s.features[b] : 1.0;
      acc.hess[a * m + b] += w * xa * xb;
    }
  }
}

using Evaluator = Accum (*)(const std::vector<SwitchSample>&, const std::vector<double>&, bool);

Accum evaluate_serial(const std::vector<SwitchSample>& samples, const std::vector<double>& theta,
                      bool with_hessian) {
  Accum acc(theta.size(), with_hessian);
  for (const auto& s : samples) accumulate(s, theta, acc);
  return acc;
}

Accum evaluate_chunked(const std::vector<SwitchSample>& samples, const std::vector<double>& theta,
                       bool with_hessian) {
  const std::size_t chunks = (samples.size() + kChunk - 1) / kChunk;
  std::vector<Accum> partial(chunks, Accum(theta.size(), with_hessian));
  const auto n_chunks = static_cast<long>(chunks);
#pragma omp parallel for schedule(static)
  for (long c = 0; c < n_chunks; ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
    const std::size_t end = std::min(samples.size(), begin + kChunk);
    for (std::size_t i = begin; i < end; ++i) accumulate(samples[i], theta, partial[static_cast<std::size_t>(c)]);
  }
  Accum acc(theta.size(), with_hessian);
  for (const auto& p : partial) acc.add(p);
  return acc;
}

// Mean loss/gradient/Hessian plus the penalty on the weights.
Accum objective(Evaluator eval, const std::vector<SwitchSample>& samples,
                const std::vector<double>& theta, double l2, bool with_hessian) {
  Accum acc = eval(samples, theta, with_hessian);
  const double n = static_cast<double>(samples.size());
  const std::size_t m = theta.size();
  const std::size_t d = m - 1;
  acc.loss /= n;
  for (auto& g : acc.grad) g /= n;
  for (auto& h : acc.hess) h /= n;
  for (std::size_t j = 0; j < d; ++j) {
    acc.loss += 0.5 * l2 * theta[j] * theta[j];
    acc.grad[j] += l2 * theta[j];
    if (with_hessian) acc.hess[j * m + j] += l2;
  }
  if (with_hessian) {
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = a + 1; b < m; ++b) acc.hess[a * m + b] = acc.hess[b * m + a];
    }
  }
  return acc;
}

// Solves H x = g in place by Cholesky; false when H is not positive definite.
bool cholesky_solve(std::vector<double> h, std::vector<double>& g) {
  const std::size_t m = g.size();
  for (std::size_t j = 0; j < m; ++j) {
    double diag = h[j * m + j];
    for (std::size_t k = 0; k < j; ++k) diag -= h[j * m + k] * h[j * m + k];
    if (!(diag > 0.0)) return false;
    const double l = std::sqrt(diag);
    h[j * m + j] = l;
    for (std::size_t i = j + 1; i < m; ++i) {
      double v = h[i * m + j];
      for (std::size_t k = 0; k < j; ++k) v -= h[i * m + k] * h[j * m + k];
      h[i * m + j] = v / l;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    double v = g[i];
    for (std::size_t k = 0; k < i; ++k) v -= h[i * m + k] * g[k];
    g[i] = v / h[i * m + i];
  }
  for (std::size_t i = m; i-- > 0;) {
    double v = g[i];
    for (std::size_t k = i + 1; k < m; ++k) v -= h[k * m + i] * g[k];
    g[i] = v / h[i * m + i];
  }
  return true;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void check_samples(const std::vector<SwitchSample>& samples) {
  if (samples.empty()) throw DegenerateData("no training samples");
  const std::size_t d = samples.front().features.size();
  bool pos = false, neg = false;
  for (const auto& s : samples) {
    if (s.features.size() != d) throw DomainError("training samples differ in feature count");
    for (double x : s.features) {
      if (!std::isfinite(x)) throw DomainError("training features must be finite");
    }
    (s.label ? pos : neg) = true;
  }
  if (!pos || !neg) {
    throw DegenerateData(std::string("training set has no ") + (pos ? "negative" : "positive") +
                         " samples");
  }
}

LogisticModel train_with(Evaluator eval, const std::vector<SwitchSample>& samples,
                         const TrainOptions& options) {
  check_samples(samples);
  if (!(options.l2 >= 0.0)) throw DomainError("l2 must be >= 0");
  const std::size_t d = samples.front().features.size();
  const std::size_t m = d + 1;
  std::vector<double> theta(m, 0.0);

  LogisticModel model;
  model.training_meta.samples = samples.size();
  model.training_meta.l2 = options.l2;

  Accum current = objective(eval, samples, theta, options.l2, true);
  int step = 0;
  for (; step < options.max_steps; ++step) {
    if (norm(current.grad) <= options.gradient_tolerance) {
      model.training_meta.converged = true;
      break;
    }
    std::vector<double> dir = current.grad;
    bool solved = cholesky_solve(current.hess, dir);
    for (double jitter = 1e-12; !solved && jitter < 1.0; jitter *= 100.0) {
      std::vector<double> h = current.hess;
      for (std::size_t i = 0; i < m; ++i) h[i * m + i] += jitter;
      dir = current.grad;
      solved = cholesky_solve(std::move(h), dir);
    }
    if (!solved) dir = current.grad;

    double slope = 0.0;
    for (std::size_t i = 0; i < m; ++i) slope += dir[i] * current.grad[i];
    double t = 1.0;
    bool moved = false;
    std::vector<double> trial(m);
    for (int halvings = 0; halvings < 60; ++halvings, t *= 0.5) {
      for (std::size_t i = 0; i < m; ++i) trial[i] = theta[i] - t * dir[i];
      Accum next = objective(eval, samples, trial, options.l2, false);
      if (next.loss <= current.loss - 1e-4 * t * slope) {
        moved = true;
        break;
      }
    }
    if (!moved) break;
    theta = trial;
    current = objective(eval, samples, theta, options.l2, true);
  }
  if (!model.training_meta.converged && norm(current.grad) <= options.gradient_tolerance) {
    model.training_meta.converged = true;
  }
  model.training_meta.steps = step;
  model.weights.assign(theta.begin(), theta.begin() + static_cast<long>(d));
  model.bias = theta[d];
  return model;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string append_question(std::string_view tmpl, const std::string& question) {
  std::string out(tmpl);
  if (out.empty() || !std::isspace(static_cast<unsigned char>(out.back()))) out += "\n";
  return out + question;
}

ModelRequest question_request(const std::string& prompt, const ReasoningInstance& instance,
                              const std::string& model_id, double temperature) {
  ModelRequest request;
  request.model_id = model_id;
  request.temperature = temperature;
  Message user{Role::user, {ContentPart::make_text(prompt)}};
  for (auto& part : attachment_parts(instance)) user.parts.push_back(std::move(part));
  request.messages.push_back(std::move(user));
  return request;
}

std::vector<double> numbers_in(const std::string& text) {
  static const std::regex kNumber(R"([-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?)");
  std::vector<double> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kNumber);
       it != std::sregex_iterator(); ++it) {
    out.push_back(std::stod(it->str()));
  }
  return out;
}

}  // namespace

std::string_view to_string(Decision decision) {
  return decision == Decision::synthesis ? "synthesis" : "cot";
}

Decision zero_shot_decide(const CriteriaVector& v) {
  if (v.scores.empty()) throw DomainError("criteria vector is empty");
  return v.scores.back() >= 0.5 ? Decision::synthesis : Decision::cot;
}

double LogisticModel::logit(const std::vector<double>& x) const {
  if (x.size() != weights.size()) {
    throw DomainError("feature count " + std::to_string(x.size()) + " does not match model (" +
                      std::to_string(weights.size()) + ")");
  }
  double z = bias;
  for (std::size_t i = 0; i < x.size(); ++i) z += weights[i] * x[i];
  return z;
}

double LogisticModel::probability(const std::vector<double>& x) const { return sigmoid(logit(x)); }

void LogisticModel::validate() const {
  if (weights.empty()) throw SchemaError("logistic model has no weights");
  for (double w : weights) {
    if (!std::isfinite(w)) throw SchemaError("logistic model weights must be finite");
  }
  if (!std::isfinite(bias)) throw SchemaError("logistic model bias must be finite");
  if (!(threshold > 0.0 && threshold < 1.0)) throw SchemaError("threshold must lie in (0,1)");
}

Json to_json(const LogisticModel& model) {
  return {{"weights", model.weights},
          {"bias", model.bias},
          {"threshold", model.threshold},
          {"training_meta",
           {{"samples", model.training_meta.samples},
            {"l2", model.training_meta.l2},
            {"converged", model.training_meta.converged},
            {"steps", model.training_meta.steps}}}};
}

LogisticModel logistic_model_from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("weights") || !doc["weights"].is_array()) {
    throw SchemaError("switch model must be an object with a weights array");
  }
  LogisticModel model;
  try {
    model.weights = doc["weights"].get<std::vector<double>>();
    model.bias = doc.value("bias", 0.0);
    model.threshold = doc.value("threshold", 0.5);
    if (doc.contains("training_meta")) {
      const Json& meta = doc["training_meta"];
      model.training_meta.samples = meta.value("samples", std::size_t{0});
      model.training_meta.l2 = meta.value("l2", 0.0);
      model.training_meta.converged = meta.value("converged", false);
      model.training_meta.steps = meta.value("steps", 0);
    }
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("malformed switch model: ") + e.what());
  }
  model.validate();
  return model;
}

LogisticModel train_switch(const std::vector<SwitchSample>& samples, const TrainOptions& options) {
  return train_with(evaluate_chunked, samples, options);
}

LogisticModel train_switch_serial(const std::vector<SwitchSample>& samples,
                                  const TrainOptions& options) {
  return train_with(evaluate_serial, samples, options);
}

double switch_objective(const std::vector<SwitchSample>& samples, const std::vector<double>& weights,
                        double bias, double l2) {
  if (samples.empty()) throw EmptyInput("no samples");
  std::vector<double> theta = weights;
  theta.push_back(bias);
  return objective(evaluate_serial, samples, theta, l2, false).loss;
}

SwitchDecision decide(const LogisticModel& model, const std::vector<double>& features) {
  const double z = model.logit(features);
  const double cut = std::log(model.threshold / (1.0 - model.threshold));
  return {sigmoid(z), z >= cut ? Decision::synthesis : Decision::cot};
}

SwitchDecision decide(const LogisticModel& model, const CriteriaVector& v) {
  return decide(model, v.scores);
}

std::optional<std::vector<double>> parse_criteria_scores(const std::string& text, std::size_t count,
                                                         std::vector<std::string>& warnings) {
  std::string upper = text;
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  const std::size_t marker = upper.rfind("FINAL ANSWER");
  if (marker == std::string::npos) return std::nullopt;
  std::string rest = text.substr(marker + 12);
  std::string list;
  const std::size_t open = rest.find('[');
  if (open != std::string::npos) {
    const std::size_t close = rest.find(']', open);
    if (close == std::string::npos) return std::nullopt;
    list = rest.substr(open + 1, close - open - 1);
  } else {
    std::istringstream lines(rest);
    std::string line;
    while (std::getline(lines, line)) {
      std::string t = trim(line);
      while (!t.empty() && (t.front() == ':' || t.front() == '*')) t = trim(t.substr(1));
      if (!t.empty()) {
        list = t;
        break;
      }
    }
  }
  std::vector<double> scores = numbers_in(list);
  if (scores.size() != count) return std::nullopt;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] < 0.0 || scores[i] > 1.0) {
      double clamped = std::clamp(scores[i], 0.0, 1.0);
      std::ostringstream msg;
      msg << "score " << (i + 1) << " = " << scores[i] << " clamped to " << clamped;
      warnings.push_back(msg.str());
      scores[i] = clamped;
    }
  }
  return scores;
}

std::string render_switch_prompt(const ReasoningInstance& instance) {
  return append_question(assets::lookup("switch_criteria"), instance.query_text);
}

std::string render_algorithmicity_prompt(const ReasoningInstance& instance) {
  return append_question(assets::lookup("algorithmicity"), instance.query_text);
}

CriteriaVector score_criteria(Provider& provider, const ReasoningInstance& instance,
                              const ScorerConfig& config) {
  const std::string prompt =
      append_question(assets::lookup(config.template_name), instance.query_text);
  ModelRequest request = question_request(prompt, instance, config.model_id, config.temperature);
  CriteriaVector out;
  for (int attempt = 0; attempt <= config.max_reprompts; ++attempt) {
    ModelResponse response = provider.complete(request);
    out.usage += response.usage;
    std::vector<std::string> warnings;
    if (auto scores = parse_criteria_scores(response.text, config.criteria_count, warnings)) {
      out.scores = std::move(*scores);
      for (auto& w : warnings) out.parse_warnings.push_back(std::move(w));
      return out;
    }
    out.parse_warnings.push_back("criteria reply " + std::to_string(attempt + 1) +
                                 " did not end with a list of " +
                                 std::to_string(config.criteria_count) + " scores");
    request.messages.push_back({Role::assistant, {ContentPart::make_text(response.text)}});
    request.messages.push_back(
        {Role::user,
         {ContentPart::make_text("Please end your reply with FINAL ANSWER: followed by a list of "
                                 "exactly " +
                                 std::to_string(config.criteria_count) +
                                 " probabilities between 0 and 1.")}});
  }
  out.scores.assign(config.criteria_count, 0.5);
  out.defaulted = true;
  out.parse_warnings.push_back("no parsable criteria scores; every score defaulted to 0.5");
  return out;
}

bool algorithmicity_rule(const std::array<bool, 10>& bits) {
  return std::count(bits.begin(), bits.end(), true) >= 8;
}

std::optional<std::array<bool, 11>> parse_algorithmicity_bits(const std::string& text) {
  static const std::regex kList(R"(\[([^\[\]]*)\])");
  std::optional<std::array<bool, 11>> found;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kList);
       it != std::sregex_iterator(); ++it) {
    std::string inner = (*it)[1].str();
    std::array<bool, 11> bits{};
    std::size_t n = 0;
    bool ok = true;
    std::istringstream items(inner);
    std::string item;
    while (std::getline(items, item, ',')) {
      std::string t = trim(item);
      if (t != "0" && t != "1") {
        ok = false;
        break;
      }
      if (n == 11) {
        ok = false;
        break;
      }
      bits[n++] = t == "1";
    }
    if (ok && n == 11) found = bits;
  }
  return found;
}

AlgoVerdict classify_algorithmicity(Provider& provider, const ReasoningInstance& instance,
                                    const std::string& model_id, double temperature) {
  ModelRequest request =
      question_request(render_algorithmicity_prompt(instance), instance, model_id, temperature);
  AlgoVerdict verdict;
  for (int attempt = 0; attempt < 3; ++attempt) {
    ModelResponse response = provider.complete(request);
    verdict.usage += response.usage;
    if (auto bits = parse_algorithmicity_bits(response.text)) {
      std::copy(bits->begin(), bits->begin() + 10, verdict.bits.begin());
      verdict.final = (*bits)[10];
      verdict.consistent_with_rule = verdict.final == algorithmicity_rule(verdict.bits);
      if (!verdict.consistent_with_rule) {
        const auto ones = std::count(verdict.bits.begin(), verdict.bits.end(), true);
        verdict.warnings.push_back("instance " + instance.id + ": final verdict " +
                                   (verdict.final ? "1" : "0") + " disagrees with " +
                                   std::to_string(ones) + "/10 criteria met");
      }
      return verdict;
    }
    request.messages.push_back({Role::assistant, {ContentPart::make_text(response.text)}});
    request.messages.push_back(
        {Role::user,
         {ContentPart::make_text("Please provide your final answer as an 11-element binary list, "
                                 "for example [1, 0, 1, 1, 1, 0, 1, 1, 1, 1, 1].")}});
  }
  throw UnclassifiedInstance("instance " + instance.id +
                             ": no 11-element binary list after two re-prompts");
}

std::vector<CalibrationBin> calibration_curve(const std::vector<std::pair<double, bool>>& predictions,
                                              int n_bins) {
  if (predictions.empty()) throw EmptyInput("calibration needs at least one prediction");
  if (n_bins < 1) throw DomainError("n_bins must be >= 1");
  std::vector<CalibrationBin> bins(static_cast<std::size_t>(n_bins));
  for (const auto& [p, label] : predictions) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("probabilities must lie in [0,1]");
    auto i = static_cast<std::size_t>(std::floor(p * n_bins));
    i = std::min(i, bins.size() - 1);
    ++bins[i].count;
    if (label) ++bins[i].positives;
  }
  std::vector<CalibrationBin> out;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (bins[i].count == 0) continue;
    CalibrationBin bin = bins[i];
    bin.bin_mid = (static_cast<double>(i) + 0.5) / n_bins;
    bin.empirical_rate = static_cast<double>(bin.positives) / static_cast<double>(bin.count);
    out.push_back(bin);
  }
  return out;
}

std::string calibration_csv(const std::vector<CalibrationBin>& bins) {
  std::ostringstream out;
  out.precision(17);
  out << "bin_mid,empirical_rate,count,positives\n";
  for (const auto& b : bins) {
    out << b.bin_mid << ',' << b.empirical_rate << ',' << b.count << ',' << b.positives << '\n';
  }
  return out.str();
}

namespace {

LodoFold run_fold(const std::map<std::string, std::vector<SwitchSample>>& grouped,
                  const std::string& held_out, const TrainOptions& options) {
  LodoFold fold;
  fold.held_out = held_out;
  std::vector<SwitchSample> train;
  for (const auto& [task, samples] : grouped) {
    if (task != held_out) train.insert(train.end(), samples.begin(), samples.end());
  }
  const auto& test = grouped.at(held_out);
  fold.train_samples = train.size();
  fold.test_samples = test.size();
  try {
    LogisticModel model = train_switch_serial(train, options);
    if (test.empty()) {
      fold.error = "held-out task has no samples";
      return fold;
    }
    std::size_t correct = 0;
    for (const auto& s : test) {
      const bool predicted = decide(model, s.features).decision == Decision::synthesis;
      if (predicted == s.label) ++correct;
    }
    fold.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  } catch (const DegenerateData& e) {
    fold.error = e.what();
  }
  return fold;
}

std::vector<std::string> fold_names(const std::map<std::string, std::vector<SwitchSample>>& grouped) {
  if (grouped.size() < 2) throw DomainError("leave-one-dataset-out needs at least two tasks");
  std::vector<std::string> names;
  for (const auto& entry : grouped) names.push_back(entry.first);
  return names;
}

}  // namespace

std::vector<LodoFold> lodo_eval_serial(const std::map<std::string, std::vector<SwitchSample>>& grouped,
                                       const TrainOptions& options) {
  std::vector<LodoFold> folds;
  for (const auto& name : fold_names(grouped)) folds.push_back(run_fold(grouped, name, options));
  return folds;
}

std::vector<LodoFold> lodo_eval(const std::map<std::string, std::vector<SwitchSample>>& grouped,
                                const TrainOptions& options) {
  const auto names = fold_names(grouped);
  std::vector<LodoFold> folds(names.size());
  std::vector<std::exception_ptr> errors(names.size());
  const auto n = static_cast<long>(names.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      folds[k] = run_fold(grouped, names[k], options);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return folds;
}

}  // namespace pips
