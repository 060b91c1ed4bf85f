#pragma once

#include <string>
#include <vector>

#include "rankshot/common.hpp"
#include "rankshot/data.hpp"
#include "rankshot/metrics.hpp"

namespace rankshot {

// Per-class mean embeddings, ordered ascending by class label.
struct PrototypeSet {
  std::vector<std::string> class_ids;
  std::vector<FeatureVector> prototypes;
};

struct ClassifierConfig {
  MetricSpec metric;
  double temperature = 10.0;
};

struct Posterior {
  std::vector<std::string> class_ids;
  std::vector<double> probs;
};

PrototypeSet compute_prototypes(const std::vector<Sample>& support);

// Softmax over temperature-scaled similarities (max-subtracted).
Posterior softmax_posterior(const std::vector<std::string>& class_ids,
                            const std::vector<double>& similarities,
                            double temperature);

// P(y = k | x) proportional to exp(t * sim(x, c_k)). `call_base` feeds the
// sampled-Kendall pair-draw counter; class k uses call index call_base + k.
Posterior class_posteriors(const FeatureVector& x, const PrototypeSet& protos,
                           const ClassifierConfig& config, std::uint64_t call_base = 0);

// Argmax class; ties go to the lowest label.
std::string predict(const FeatureVector& x, const PrototypeSet& protos,
                    const ClassifierConfig& config, std::uint64_t call_base = 0);

// d(-log p_true)/d sim_k = t * (p_k - [k == true]), per class in posterior order.
std::vector<double> posterior_loss_backward(const Posterior& post,
                                            const std::string& true_label,
                                            double temperature);

}  // namespace rankshot
