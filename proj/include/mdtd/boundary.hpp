#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "mdtd/net.hpp"

namespace mdtd {

enum class OracleAccess { gradient, label_only };
enum class DistNorm { linf, l2 };

// Uniform view of the model under test. Label queries are counted; gradient
// queries are rejected for label-only oracles.
class ModelOracle {
  public:
    ModelOracle(const Network& net, OracleAccess access)
        : net_(&net), access_(access) {}

    OracleAccess access() const { return access_; }
    std::uint64_t queries() const { return queries_; }
    const std::vector<std::size_t>& input_shape() const { return net_->input_shape; }

    std::size_t label(const Tensor& x) const {
        ++queries_;
        return predict(*net_, x);
    }

    Tensor loss_grad(const Tensor& x, std::size_t y) const {
        if (access_ != OracleAccess::gradient)
            throw std::runtime_error("oracle is label-only; gradients unavailable");
        return grad_input(*net_, x, y);
    }

  private:
    const Network* net_;
    OracleAccess access_;
    mutable std::uint64_t queries_ = 0;
};

struct DistanceEstimate {
    double value = 0.0;
    DistNorm norm = DistNorm::linf;
    std::uint64_t queries_used = 0;
    bool converged = false;
    std::optional<Tensor> witness;  // misclassified point when converged
};

struct FgsmConfig {
    double eps_max = 1.0;
    double bisect_tol = 1e-3;
    double clamp_lo = 0.0;
    double clamp_hi = 1.0;
};

struct IfgsmConfig {
    double step_size = 0.01;
    std::size_t max_steps = 200;
    double clamp_lo = 0.0;
    double clamp_hi = 1.0;
};

struct HsjConfig {
    std::size_t iterations = 30;
    std::size_t init_grad_queries = 100;  // B0
    double binary_tol = 1e-4;
    std::uint64_t max_queries = 20000;
    std::uint64_t seed = 0;
    double init_lo = 0.0;  // range for random initial points
    double init_hi = 1.0;
};

// Single-step sign-of-gradient direction, bisecting the smallest flipping
// magnitude along it (L-inf).
DistanceEstimate fgsm_distance(const ModelOracle& oracle, const Tensor& x,
                               const FgsmConfig& cfg);

// Iterated sign steps until the label flips (L-inf distance at first flip).
DistanceEstimate ifgsm_distance(const ModelOracle& oracle, const Tensor& x,
                                const IfgsmConfig& cfg);

// Decision-based HopSkipJump search (L2), label queries only.
DistanceEstimate hsj_distance(const ModelOracle& oracle, const Tensor& x,
                              const HsjConfig& cfg);

using EstimatorConfig = std::variant<FgsmConfig, IfgsmConfig, HsjConfig>;

// Independent per-sample estimates; sample i uses its own oracle and, for
// seeded estimators, seed base+i, so results do not depend on order.
std::vector<DistanceEstimate> distance_batch(const Network& net, OracleAccess access,
                                             const std::vector<Tensor>& samples,
                                             const EstimatorConfig& cfg);

// CSV with header sample_index,distance,norm,queries,converged.
std::string distances_csv(const std::vector<DistanceEstimate>& estimates);

}  // namespace mdtd
