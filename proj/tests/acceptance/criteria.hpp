#pragma once

#include <filesystem>
#include <string>

namespace scene_informer::acceptance {

struct Context {
  std::filesystem::path artifacts = "acceptance_artifacts";
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome gradient_criterion(const Context& context);
Outcome geometry_criterion(const Context& context);
Outcome gmm_criterion(const Context& context);
Outcome coupling_criterion(const Context& context);
Outcome overfit_criterion(const Context& context);
Outcome generalization_criterion(const Context& context);
Outcome sweep_criterion(const Context& context);
Outcome permutation_criterion(const Context& context);
Outcome determinism_criterion(const Context& context);

}  // namespace scene_informer::acceptance
