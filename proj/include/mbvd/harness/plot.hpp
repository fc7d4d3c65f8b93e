#pragma once
// Standalone SVG renderers for learning curves and latent embeddings.

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mbvd/harness/embeddings.hpp"
#include "mbvd/harness/metrics.hpp"

namespace mbvd::harness {

struct Curve {
  std::string label;
  std::vector<MetricsRow> rows;
};

// Eval median against env steps with a shaded 25-75% band per curve.
std::string learning_curve_svg(const std::vector<Curve>& curves);

// Rows of x projected onto the top two principal components (centred).
Eigen::MatrixXd pca_2d(const Eigen::MatrixXd& x);

// Real and imagined latents in a shared 2-D PCA projection, coloured by depth.
std::string embedding_svg(const EmbeddingSet& set);

}  // namespace mbvd::harness
