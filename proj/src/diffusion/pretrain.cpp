#include "dinr/diffusion/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "dinr/diffusion/sampling.hpp"
#include "dinr/errors.hpp"
#include "dinr/nnkit/adam.hpp"
#include "dinr/nnkit/ops.hpp"
#include "dinr/rng.hpp"

namespace dinr::diffusion {

PretrainReport pretrain(DenoiserModel& model, const std::vector<tomo::Volume>& dataset, const PretrainOptions& opt,
                        const EpochCallback& on_epoch) {
  if (dataset.empty()) throw std::invalid_argument("pretrain: dataset is empty");
  if (opt.batch_size == 0) throw std::invalid_argument("pretrain: batch_size must be >= 1");
  PretrainReport report;
  if (opt.epochs == 0) return report;

  const auto& sched = model.schedule;
  const auto T = static_cast<std::int64_t>(sched.T());
  Rng rng(opt.seed);
  nn::AdamState adam;
  nn::AdamOptions adam_opt;
  adam_opt.lr = opt.lr;

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      const std::size_t stop = std::min(order.size(), start + opt.batch_size);
      const double inv_b = 1.0 / static_cast<double>(stop - start);
      model.params.zero_grad();
      for (std::size_t k = start; k < stop; ++k) {
        const auto& x0 = dataset[order[k]].data;
        const auto t = static_cast<std::size_t>(rng.uniform_int(1, T));
        const Tensor eps = standard_normal(x0.shape(), rng.engine()());
        const Tensor xt = q_sample(x0, t, eps, sched);

        try {
          nn::Graph g;
          auto pred = predict_noise(g, model, g.constant(xt), sched.train_step(t));
          auto loss = nn::mse(pred, g.constant(eps));
          total += loss.value().item();
          g.backward(nn::scale(loss, inv_b));
        } catch (const NonFiniteError& e) {
          throw DivergenceError(
              fmt::format("pretrain diverged at epoch {}, sample {}, t = {}: {}", epoch + 1, order[k], t, e.what()));
        }
      }
      nn::adam_step(model.params, adam, adam_opt);
    }
    const double mean = total / static_cast<double>(order.size());
    report.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch + 1, mean);
  }
  return report;
}

}  // namespace dinr::diffusion
