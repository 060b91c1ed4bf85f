#include "rankshot/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace rankshot {

PrototypeSet compute_prototypes(const std::vector<Sample>& support) {
  if (support.empty()) {
    throw std::invalid_argument("cannot compute prototypes from empty support");
  }
  const std::size_t dim = support.front().values.size();
  std::map<std::string, std::pair<FeatureVector, std::size_t>> sums;
  for (const auto& s : support) {
    if (s.values.size() != dim) {
      throw std::invalid_argument("support vectors disagree on dimension");
    }
    auto [it, inserted] = sums.try_emplace(s.label, FeatureVector(dim, 0.0), 0);
    for (std::size_t i = 0; i < dim; ++i) it->second.first[i] += s.values[i];
    ++it->second.second;
  }
  PrototypeSet set;
  for (auto& [label, sum_count] : sums) {
    auto& [sum, count] = sum_count;
    for (double& v : sum) v /= static_cast<double>(count);
    set.class_ids.push_back(label);
    set.prototypes.push_back(std::move(sum));
  }
  return set;
}

Posterior softmax_posterior(const std::vector<std::string>& class_ids,
                            const std::vector<double>& similarities,
                            double temperature) {
  if (class_ids.size() != similarities.size() || class_ids.empty()) {
    throw std::invalid_argument("class/similarity size mismatch");
  }
  if (temperature <= 0.0) {
    throw std::invalid_argument("temperature must be > 0");
  }
  const double max_logit =
      temperature * *std::max_element(similarities.begin(), similarities.end());
  Posterior post;
  post.class_ids = class_ids;
  post.probs.resize(similarities.size());
  double norm = 0.0;
  for (std::size_t k = 0; k < similarities.size(); ++k) {
    post.probs[k] = std::exp(temperature * similarities[k] - max_logit);
    norm += post.probs[k];
  }
  for (double& p : post.probs) p /= norm;
  return post;
}

Posterior class_posteriors(const FeatureVector& x, const PrototypeSet& protos,
                           const ClassifierConfig& config, std::uint64_t call_base) {
  std::vector<double> sims(protos.prototypes.size());
  for (std::size_t k = 0; k < protos.prototypes.size(); ++k) {
    sims[k] = similarity(config.metric, x, protos.prototypes[k], call_base + k);
  }
  return softmax_posterior(protos.class_ids, sims, config.temperature);
}

std::string predict(const FeatureVector& x, const PrototypeSet& protos,
                    const ClassifierConfig& config, std::uint64_t call_base) {
  const Posterior post = class_posteriors(x, protos, config, call_base);
  std::size_t best = 0;
  for (std::size_t k = 1; k < post.probs.size(); ++k) {
    if (post.probs[k] > post.probs[best]) best = k;  // class_ids ascending: ties keep lowest
  }
  return post.class_ids[best];
}

std::vector<double> posterior_loss_backward(const Posterior& post,
                                            const std::string& true_label,
                                            double temperature) {
  const auto it = std::find(post.class_ids.begin(), post.class_ids.end(), true_label);
  if (it == post.class_ids.end()) {
    throw std::invalid_argument("label '" + true_label + "' not in posterior");
  }
  const auto true_idx = static_cast<std::size_t>(it - post.class_ids.begin());
  std::vector<double> grads(post.probs.size());
  for (std::size_t k = 0; k < post.probs.size(); ++k) {
    grads[k] = temperature * (post.probs[k] - (k == true_idx ? 1.0 : 0.0));
  }
  return grads;
}

}  // namespace rankshot
