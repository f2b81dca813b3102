#include "tastenet/estimation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <thread>

#include "tastenet/error.hpp"
#include "tastenet/format.hpp"
#include "tastenet/indicators.hpp"

namespace tastenet {

void TrainConfig::validate() const {
  auto check = [](bool ok, const char* msg) {
    if (!ok) fail(ErrorKind::argument, msg);
  };
  check(std::isfinite(learning_rate) && learning_rate > 0.0, "learning_rate must be > 0");
  check(batch_size >= 1, "batch_size must be >= 1");
  check(max_epochs >= 1, "max_epochs must be >= 1");
  check(patience >= 1, "patience must be >= 1");
  check(reg_norm == 1 || reg_norm == 2, "reg_norm must be 1 or 2");
  check(std::isfinite(reg_strength) && reg_strength >= 0.0, "reg_strength must be >= 0");
  check(restarts >= 1, "restarts must be >= 1");
  check(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "Adam betas must be in [0, 1)");
  check(epsilon > 0.0, "Adam epsilon must be > 0");
  check(max_abs_param > 0.0, "max_abs_param must be > 0");
}

namespace {

std::span<const double> draws_for(const DrawTable* draws, std::size_t row) {
  if (!draws || draws->draws() == 0) return {};
  return draws->row(row);
}

// Mean NLL and gradient over `batch`; grad is overwritten.
void batch_loss(Evaluator& eval, const FittedModel& model, const Dataset& data,
                std::span<const std::size_t> batch, const TrainConfig& cfg,
                const DrawTable* draws, LossResult& out) {
  if (batch.empty()) fail(ErrorKind::argument, "batch is empty");
  out.grad.set_zero();
  double total = 0.0;
  for (std::size_t row : batch) {
    const double loss = eval.loss_and_gradient(data[row], draws_for(draws, row), out.grad);
    if (!std::isfinite(loss)) {
      fail(ErrorKind::training, "non-finite loss at observation " + std::to_string(row));
    }
    total += loss;
  }
  const double n = static_cast<double>(batch.size());
  out.grad.scale(1.0 / n);
  out.nll = total / n;
  out.penalty = 0.0;
  if (model.has_network() && cfg.reg_strength > 0.0) {
    out.penalty = cfg.reg_strength * weight_penalty(model.mlp, cfg.reg_norm);
    add_penalty_gradient(model.mlp, cfg.reg_norm, cfg.reg_strength, out.grad.mlp);
  }
  out.loss = out.nll + out.penalty;
}

// Unclamped mean NLL; non-finite values propagate.
double mean_nll(Evaluator& eval, const Dataset& data, const DrawTable* draws) {
  double total = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) total += eval.loss(data[n], draws_for(draws, n));
  return total / static_cast<double>(data.size());
}

class Adam {
 public:
  Adam(std::size_t size, const TrainConfig& cfg) : cfg_(cfg), m_(size, 0.0), v_(size, 0.0) {}

  void step(FittedModel& model, const ModelGradient& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    std::size_t k = 0;
    auto update = [&](std::span<double> params, std::span<const double> g) {
      for (std::size_t i = 0; i < params.size(); ++i, ++k) {
        m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * g[i];
        v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * g[i] * g[i];
        const double mhat = m_[k] / c1;
        const double vhat = v_[k] / c2;
        params[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
      }
    };
    if (model.has_network()) update(model.mlp.values(), grad.mlp.values());
    update(model.beta, grad.beta);
  }

 private:
  const TrainConfig& cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t t_ = 0;
};

// Largest |parameter| and where it sits, for divergence diagnostics.
std::pair<double, std::string> largest_parameter(const FittedModel& model) {
  double top = 0.0;
  std::string where = "none";
  for (std::size_t i = 0; i < model.beta.size(); ++i) {
    const double a = std::fabs(model.beta[i]);
    if (!(a <= top)) {
      top = a;
      where = model.utility.parametric_names[i];
      if (std::isnan(a)) return {top, where};
    }
  }
  if (model.has_network()) {
    const auto values = model.mlp.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double a = std::fabs(values[i]);
      if (!(a <= top)) {
        top = a;
        where = "network[" + std::to_string(i) + "]";
        if (std::isnan(a)) return {top, where};
      }
    }
  }
  return {top, where};
}

void check_spec(const ModelSpec& spec, const Dataset& train, const Dataset& dev) {
  if (train.empty()) fail(ErrorKind::data, "training dataset is empty");
  if (dev.empty()) fail(ErrorKind::data, "development dataset is empty");
  const std::size_t outputs = spec.utility.network_outputs();
  if (outputs > 0 && !spec.mlp) fail(ErrorKind::spec, "utility uses network outputs but no network");
  if (outputs == 0 && spec.mlp) fail(ErrorKind::spec, "network given but the utility uses none of it");
}

}  // namespace

LossResult regularized_loss(const FittedModel& model, const Dataset& data,
                            std::span<const std::size_t> batch, const TrainConfig& cfg,
                            const DrawTable* draws) {
  if (model.utility.random && (!draws || draws->observations() < data.size())) {
    fail(ErrorKind::argument, "mixed model needs a draw table covering the dataset");
  }
  for (std::size_t row : batch) {
    if (row >= data.size()) fail(ErrorKind::argument, "batch row out of range");
  }
  Evaluator eval(model);
  LossResult out;
  out.grad = ModelGradient(model);
  batch_loss(eval, model, data, batch, cfg, draws, out);
  return out;
}

FittedModel train_single(const ModelSpec& spec, const Dataset& train, const Dataset& dev,
                         const TrainConfig& cfg, std::size_t restart) {
  cfg.validate();
  check_spec(spec, train, dev);
  const std::uint64_t run_seed = derive_seed(cfg.seed, restart);
  FittedModel model = make_model(spec.schema, spec.utility, spec.mlp ? &*spec.mlp : nullptr,
                                 derive_seed(run_seed, 0));
  model.check_compatible(train.schema());
  model.check_compatible(dev.schema());

  DrawTable train_draws;
  DrawTable dev_draws;
  if (spec.utility.random) {
    train_draws = DrawTable(train.size(), spec.utility.random->draws);
    dev_draws = DrawTable(dev.size(), spec.utility.random->draws);
  }
  const DrawTable* tdraws = spec.utility.random ? &train_draws : nullptr;
  const DrawTable* ddraws = spec.utility.random ? &dev_draws : nullptr;

  Evaluator eval(model);
  LossResult batch;
  batch.grad = ModelGradient(model);
  Adam adam(model.beta.size() + (model.has_network() ? model.mlp.size() : 0), cfg);
  std::mt19937_64 rng(derive_seed(run_seed, 1));

  const double initial_nll = mean_nll(eval, train, tdraws);
  double best_dev = mean_nll(eval, dev, ddraws);
  if (!std::isfinite(initial_nll) || !std::isfinite(best_dev)) {
    fail(ErrorKind::training, "initial likelihood is not finite");
  }
  model.history.push_back({0, initial_nll, best_dev});
  FittedModel best = model;
  std::size_t since_best = 0;
  std::size_t bad_epochs = 0;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - start);
      const std::span<const std::size_t> rows(order.data() + start, len);
      batch_loss(eval, model, train, rows, cfg, tdraws, batch);
      epoch_total += batch.nll * static_cast<double>(len);
      adam.step(model, batch.grad);
      const auto [top, where] = largest_parameter(model);
      if (!(top <= cfg.max_abs_param)) {
        fail(ErrorKind::training,
             "diverged in epoch " + std::to_string(epoch) + ": parameter " + where +
                 " reached magnitude " + format_number(top) + " (limit " +
                 format_number(cfg.max_abs_param) + ")");
      }
    }
    const double train_nll = epoch_total / static_cast<double>(train.size());
    const double dev_nll = mean_nll(eval, dev, ddraws);
    model.history.push_back({epoch, train_nll, dev_nll});
    if (!std::isfinite(train_nll) || !std::isfinite(dev_nll)) {
      fail(ErrorKind::training, "diverged in epoch " + std::to_string(epoch) +
                                    ": likelihood is not finite");
    }
    bad_epochs = train_nll > 10.0 * initial_nll ? bad_epochs + 1 : 0;
    if (bad_epochs >= 3) {
      fail(ErrorKind::training, "diverged: train NLL " + format_number(train_nll) +
                                    " exceeded 10x the initial " + format_number(initial_nll) +
                                    " for 3 consecutive epochs (epoch " +
                                    std::to_string(epoch) + ")");
    }
    if (dev_nll < best_dev) {
      best_dev = dev_nll;
      best.mlp = model.mlp;
      best.beta = model.beta;
      best.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  best.history = std::move(model.history);
  best.metadata["restart"] = restart;
  best.metadata["seed"] = cfg.seed;
  best.metadata["epochs_run"] = best.history.back().epoch;
  best.metadata["best_dev_nll"] = best_dev;
  return best;
}

FittedModel train(const ModelSpec& spec, const Dataset& train_data, const Dataset& dev,
                  const TrainConfig& cfg) {
  cfg.validate();
  std::optional<FittedModel> best;
  nlohmann::json per_restart = nlohmann::json::array();
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    FittedModel fit = train_single(spec, train_data, dev, cfg, r);
    const double dev_nll = fit.metadata["best_dev_nll"].get<double>();
    per_restart.push_back(dev_nll);
    if (!best || dev_nll < best->metadata["best_dev_nll"].get<double>()) best = std::move(fit);
  }
  best->metadata["restart_dev_nll"] = std::move(per_restart);
  return std::move(*best);
}

FittedModel estimate_mnl(const FeatureSchema& schema, const UtilitySpec& utility,
                         const Dataset& train_data, const Dataset& dev, const TrainConfig& cfg) {
  if (utility.network_outputs() > 0 || utility.random) {
    fail(ErrorKind::spec, "estimate_mnl needs a purely parametric utility");
  }
  return train({schema, utility, std::nullopt}, train_data, dev, cfg);
}

RclFit estimate_rcl(const FeatureSchema& schema, const UtilitySpec& utility,
                    const Dataset& train_data, const Dataset& dev, const TrainConfig& cfg) {
  if (!utility.random) fail(ErrorKind::spec, "estimate_rcl needs a random coefficient");
  if (utility.network_outputs() > 0) {
    fail(ErrorKind::spec, "random coefficients cannot be combined with network outputs");
  }
  RclFit fit{train({schema, utility, std::nullopt}, train_data, dev, cfg), 0.0};
  fit.sigma = fit.model.sigma();
  return fit;
}

// ---------------------------------------------------------------------------

std::size_t SearchSpace::config_count() const {
  return hidden_sizes.size() * activations.size() *
         std::max<std::size_t>(1, constrained_transforms.size()) * reg_norms.size() *
         reg_strengths.size();
}

void SearchSpace::validate() const {
  if (hidden_sizes.empty() || activations.empty() || reg_norms.empty() || reg_strengths.empty()) {
    fail(ErrorKind::argument, "search space has an empty dimension");
  }
  for (int p : reg_norms) {
    if (p != 1 && p != 2) fail(ErrorKind::argument, "reg_norms entries must be 1 or 2");
  }
  for (double s : reg_strengths) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      fail(ErrorKind::argument, "reg_strengths entries must be >= 0");
    }
  }
  for (const auto& h : hidden_sizes) {
    for (std::size_t units : h) {
      if (units == 0) fail(ErrorKind::argument, "hidden sizes must be positive");
    }
  }
}

GridResult grid_search(const ModelSpec& base, const SearchSpace& space, const Dataset& train_data,
                       const Dataset& dev, const TrainConfig& cfg, std::size_t workers) {
  space.validate();
  cfg.validate();
  if (!base.mlp) fail(ErrorKind::spec, "grid search needs a network in the base spec");

  struct Job {
    GridRow row;
    ModelSpec spec;
    TrainConfig cfg;
  };
  std::vector<Job> jobs;
  std::size_t config = 0;
  const std::vector<OutputTransform> transforms =
      space.constrained_transforms.empty() ? std::vector<OutputTransform>{OutputTransform::identity}
                                           : space.constrained_transforms;
  for (const auto& hidden : space.hidden_sizes) {
    for (Activation act : space.activations) {
      for (OutputTransform tr : transforms) {
        for (int p : space.reg_norms) {
          for (double lambda : space.reg_strengths) {
            ModelSpec spec = base;
            spec.mlp->hidden_sizes = hidden;
            spec.mlp->hidden_activations.assign(hidden.size(), act);
            if (!space.constrained_transforms.empty()) {
              for (auto& t : spec.mlp->output_transforms) {
                if (t != OutputTransform::identity) t = tr;
              }
            }
            TrainConfig run_cfg = cfg;
            run_cfg.reg_norm = p;
            run_cfg.reg_strength = lambda;
            run_cfg.restarts = 1;
            for (std::size_t r = 0; r < cfg.restarts; ++r) {
              GridRow row;
              row.config = config;
              row.restart = r;
              row.hidden_sizes = hidden;
              row.activation = act;
              row.transform = tr;
              row.reg_norm = p;
              row.reg_strength = lambda;
              jobs.push_back({std::move(row), spec, run_cfg});
            }
            ++config;
          }
        }
      }
    }
  }

  std::vector<std::optional<FittedModel>> models(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      auto& job = jobs[j];
      try {
        FittedModel fit = train_single(job.spec, train_data, dev, job.cfg, job.row.restart);
        const auto tm = classification_metrics(fit, train_data);
        const auto dm = classification_metrics(fit, dev);
        job.row.train_nll = tm.nll;
        job.row.dev_nll = dm.nll;
        job.row.train_acc = tm.acc;
        job.row.dev_acc = dm.acc;
        job.row.epochs = fit.history.back().epoch;
        job.row.ok = true;
        models[j] = std::move(fit);
      } catch (const std::exception& e) {
        job.row.ok = false;
        job.row.error = e.what();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(workers, jobs.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  GridResult result;
  for (auto& job : jobs) result.rows.push_back(std::move(job.row));
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    if (result.rows[i].ok) result.ranking.push_back(i);
  }
  std::stable_sort(result.ranking.begin(), result.ranking.end(),
                   [&](std::size_t a, std::size_t b) {
                     return result.rows[a].dev_nll < result.rows[b].dev_nll;
                   });
  if (!result.ranking.empty()) result.best = std::move(models[result.ranking.front()]);
  return result;
}

void write_grid_csv(const GridResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write '" + path.string() + "'");
  std::vector<std::size_t> rank(result.rows.size(), 0);
  for (std::size_t r = 0; r < result.ranking.size(); ++r) rank[result.ranking[r]] = r + 1;
  out << "config,restart,hidden_sizes,activation,transform,reg_norm,reg_strength,status,"
         "train_nll,dev_nll,train_acc,dev_acc,epochs,rank,error\n";
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const auto& row = result.rows[i];
    std::string hidden;
    for (std::size_t h = 0; h < row.hidden_sizes.size(); ++h) {
      hidden += (h ? ";" : "") + std::to_string(row.hidden_sizes[h]);
    }
    std::string error = row.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    out << row.config << ',' << row.restart << ',' << hidden << ','
        << activation_name(row.activation) << ',' << transform_name(row.transform) << ','
        << row.reg_norm << ',' << format_number(row.reg_strength) << ','
        << (row.ok ? "ok" : "failed") << ',';
    if (row.ok) {
      out << format_number(row.train_nll) << ',' << format_number(row.dev_nll) << ','
          << format_number(row.train_acc) << ',' << format_number(row.dev_acc) << ','
          << row.epochs << ',' << rank[i];
    } else {
      out << ",,,,,";
    }
    out << ',' << error << '\n';
  }
  if (!out) fail(ErrorKind::io, "write failed for '" + path.string() + "'");
}

}  // namespace tastenet
