#include "bfn/model.hpp"

#include <string>

#include "bfn/oracle.hpp"

namespace bfn {

void ModelConfig::validate() const {
  switch (modality) {
    case Modality::continuous: continuous_config().validate(); break;
    case Modality::discretised: discretised_config().validate(); break;
    case Modality::discrete: discrete_config().validate(); break;
  }
  if (noise_sigma < 0.0) throw DomainError("noise_sigma must be positive when set");
}

continuous::Config ModelConfig::continuous_config() const {
  continuous::Config c;
  c.sigma1 = sigma1;
  c.t_min = t_min;
  c.dim = dim;
  return c;
}

discretised::Config ModelConfig::discretised_config() const {
  return {sigma1, classes, dim, t_min};
}

discrete::Config ModelConfig::discrete_config() const { return {beta1, classes, dim}; }

void ModelConfig::check_dataset(const Dataset& ds) const {
  if (ds.modality != modality)
    throw DomainError("dataset modality " + std::string(to_string(ds.modality)) +
                      " does not match model modality " + std::string(to_string(modality)));
  if (ds.dim != dim)
    throw DomainError("dataset dimension " + std::to_string(ds.dim) + " does not match model " +
                      std::to_string(dim));
  if (modality != Modality::continuous && ds.classes != classes)
    throw DomainError("dataset classes " + std::to_string(ds.classes) + " does not match model " +
                      std::to_string(classes));
  if (ds.size() == 0) throw DomainError("dataset is empty");
}

FlowDraw draw_flow(Rng& rng, const ModelConfig& cfg, const Dataset& ds, std::size_t item,
                   double t) {
  FlowDraw d;
  d.t = t;
  switch (cfg.modality) {
    case Modality::continuous:
      d.mean = continuous::flow_sample(rng, cfg.continuous_config(), ds.real(item), t).mean;
      d.network_input = d.mean;
      break;
    case Modality::discretised: {
      const Vec c = ds.centers(item);
      d.mean = continuous::flow_sample(rng, cfg.discretised_config().flow_config(), c, t).mean;
      d.network_input = d.mean;
      break;
    }
    case Modality::discrete:
      d.network_input =
          discrete::network_input(discrete::flow_sample(rng, cfg.discrete_config(), ds.index(item), t));
      break;
  }
  return d;
}

LossGrad cts_time_loss(const ModelConfig& cfg, const Dataset& ds, std::size_t item,
                       const FlowDraw& draw, std::span<const double> net) {
  switch (cfg.modality) {
    case Modality::continuous:
      return continuous::cts_time_loss_from_output(cfg.continuous_config(), ds.real(item), draw.mean,
                                                   draw.t, net);
    case Modality::discretised:
      return discretised::cts_time_loss_from_output(cfg.discretised_config(), ds.centers(item),
                                                    draw.mean, draw.t, net);
    case Modality::discrete:
      return discrete::cts_time_loss_from_output(cfg.discrete_config(), ds.index(item), draw.t, net);
  }
  return {};
}

double loss_n_step(Rng& rng, const Predictor& p, const ModelConfig& cfg, const Dataset& ds,
                   std::size_t item, int n) {
  switch (cfg.modality) {
    case Modality::continuous:
      return continuous::loss_n_step(rng, p, cfg.continuous_config(), ds.real(item), n);
    case Modality::discretised:
      return discretised::loss_n_step(rng, p, cfg.discretised_config(), ds.centers(item), n);
    case Modality::discrete:
      return discrete::loss_n_step(rng, p, cfg.discrete_config(), ds.index(item), n);
  }
  return 0.0;
}

double loss_cts_time(Rng& rng, const Predictor& p, const ModelConfig& cfg, const Dataset& ds,
                     std::size_t item) {
  switch (cfg.modality) {
    case Modality::continuous:
      return continuous::loss_cts_time(rng, p, cfg.continuous_config(), ds.real(item));
    case Modality::discretised:
      return discretised::loss_cts_time(rng, p, cfg.discretised_config(), ds.centers(item));
    case Modality::discrete:
      return discrete::loss_cts_time(rng, p, cfg.discrete_config(), ds.index(item));
  }
  return 0.0;
}

double reconstruction_loss(Rng& rng, const Predictor& p, const ModelConfig& cfg,
                           const Dataset& ds, std::size_t item) {
  switch (cfg.modality) {
    case Modality::continuous:
      if (!(cfg.noise_sigma > 0.0))
        throw DomainError("continuous reconstruction needs noise_sigma to be set");
      return continuous::reconstruction_loss(rng, p, cfg.continuous_config(), ds.real(item),
                                             cfg.noise_sigma);
    case Modality::discretised:
      return discretised::reconstruction_loss(rng, p, cfg.discretised_config(), ds.centers(item));
    case Modality::discrete:
      return discrete::reconstruction_loss(rng, p, cfg.discrete_config(), ds.index(item));
  }
  return 0.0;
}

Sample generate(Rng& rng, const Predictor& p, const ModelConfig& cfg, int n) {
  Sample s;
  switch (cfg.modality) {
    case Modality::continuous:
      s.reals = continuous::generate(rng, p, cfg.continuous_config(), n);
      break;
    case Modality::discretised:
      s.reals = discretised::generate(rng, p, cfg.discretised_config(), n);
      s.indices = discretised::quantise(s.reals, cfg.classes).index;
      break;
    case Modality::discrete:
      s.indices = discrete::generate(rng, p, cfg.discrete_config(), n);
      break;
  }
  return s;
}

std::unique_ptr<Predictor> make_dataset_oracle(const ModelConfig& cfg, const Dataset& ds) {
  cfg.check_dataset(ds);
  switch (cfg.modality) {
    case Modality::continuous: {
      std::vector<Vec> items;
      for (std::size_t i = 0; i < ds.size(); ++i) items.emplace_back(ds.real(i).begin(), ds.real(i).end());
      return std::make_unique<continuous::BayesOracle>(cfg.continuous_config(), std::move(items));
    }
    case Modality::discretised: {
      std::vector<Vec> items;
      for (std::size_t i = 0; i < ds.size(); ++i) items.push_back(ds.centers(i));
      return std::make_unique<discretised::BayesOracle>(cfg.discretised_config(), std::move(items));
    }
    case Modality::discrete: {
      std::vector<std::vector<int>> items;
      for (std::size_t i = 0; i < ds.size(); ++i) items.emplace_back(ds.index(i).begin(), ds.index(i).end());
      return std::make_unique<discrete::BayesOracle>(cfg.discrete_config(), std::move(items));
    }
  }
  return nullptr;
}

}  // namespace bfn
