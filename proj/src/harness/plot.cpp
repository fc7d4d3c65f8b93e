#include "mbvd/harness/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

#include "mbvd/core/errors.hpp"

namespace mbvd::harness {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kMargin = 50.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

struct Frame {
  double x0, x1, y0, y1;

  double px(double x) const { return kMargin + (x - x0) / (x1 - x0) * (kWidth - 2 * kMargin); }
  double py(double y) const { return kHeight - kMargin - (y - y0) / (y1 - y0) * (kHeight - 2 * kMargin); }
};

Frame make_frame(double x0, double x1, double y0, double y1) {
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double pad = 0.05 * (y1 - y0);
  return {x0, x1, y0 - pad, y1 + pad};
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string header(const std::string& title) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt("%.0f", kWidth) + "\" height=\"" +
                  fmt("%.0f", kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt("%.1f", kWidth / 2) + "\" y=\"20\" text-anchor=\"middle\">" + title + "</text>\n";
  return s;
}

std::string axes(const Frame& f, const std::string& xlabel, const std::string& ylabel) {
  std::string s;
  s += "<rect x=\"" + fmt("%.1f", kMargin) + "\" y=\"" + fmt("%.1f", kMargin) + "\" width=\"" +
       fmt("%.1f", kWidth - 2 * kMargin) + "\" height=\"" + fmt("%.1f", kHeight - 2 * kMargin) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
    s += "<text x=\"" + fmt("%.1f", f.px(xv)) + "\" y=\"" + fmt("%.1f", kHeight - kMargin + 16) +
         "\" text-anchor=\"middle\">" + fmt("%.4g", xv) + "</text>\n";
    s += "<text x=\"" + fmt("%.1f", kMargin - 4) + "\" y=\"" + fmt("%.1f", f.py(yv) + 4) + "\" text-anchor=\"end\">" +
         fmt("%.3g", yv) + "</text>\n";
  }
  s += "<text x=\"" + fmt("%.1f", kWidth / 2) + "\" y=\"" + fmt("%.1f", kHeight - 12) + "\" text-anchor=\"middle\">" +
       xlabel + "</text>\n";
  s += "<text x=\"14\" y=\"" + fmt("%.1f", kHeight / 2) + "\" transform=\"rotate(-90 14 " + fmt("%.1f", kHeight / 2) +
       ")\" text-anchor=\"middle\">" + ylabel + "</text>\n";
  return s;
}

std::string legend(const std::vector<std::string>& labels) {
  std::string s;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double y = kMargin + 14 + 16 * static_cast<double>(i);
    s += "<rect x=\"" + fmt("%.1f", kWidth - kMargin - 120) + "\" y=\"" + fmt("%.1f", y - 9) +
         "\" width=\"10\" height=\"10\" fill=\"" + kPalette[i % 8] + "\"/>\n";
    s += "<text x=\"" + fmt("%.1f", kWidth - kMargin - 105) + "\" y=\"" + fmt("%.1f", y) + "\">" + labels[i] +
         "</text>\n";
  }
  return s;
}

}  // namespace

std::string learning_curve_svg(const std::vector<Curve>& curves) {
  double x0 = 0.0, x1 = 0.0;
  double y0 = std::numeric_limits<double>::infinity(), y1 = -std::numeric_limits<double>::infinity();
  for (const auto& c : curves) {
    for (const auto& r : c.rows) {
      x1 = std::max(x1, static_cast<double>(r.env_steps));
      y0 = std::min(y0, r.eval_return_q25);
      y1 = std::max(y1, r.eval_return_q75);
    }
  }
  if (!(y1 >= y0)) throw UsageError("no metrics rows to plot");
  const Frame f = make_frame(x0, x1, y0, y1);
  std::string s = header("Evaluation return (median, 25-75%)");
  s += axes(f, "environment steps", "return");
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& rows = curves[i].rows;
    const char* color = kPalette[i % 8];
    labels.push_back(curves[i].label);
    if (rows.empty()) continue;
    std::string band;
    for (const auto& r : rows) band += fmt("%.2f,", f.px(static_cast<double>(r.env_steps))) + fmt("%.2f ", f.py(r.eval_return_q75));
    for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
      band += fmt("%.2f,", f.px(static_cast<double>(it->env_steps))) + fmt("%.2f ", f.py(it->eval_return_q25));
    }
    s += "<polygon points=\"" + band + "\" fill=\"" + color + "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    std::string line;
    for (const auto& r : rows) line += fmt("%.2f,", f.px(static_cast<double>(r.env_steps))) + fmt("%.2f ", f.py(r.eval_return_median));
    s += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
  }
  s += legend(labels);
  s += "</svg>\n";
  return s;
}

Eigen::MatrixXd pca_2d(const Eigen::MatrixXd& x) {
  if (x.rows() < 2 || x.cols() < 1) throw UsageError("pca_2d needs at least two rows");
  const Eigen::MatrixXd centred = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(x.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  // Eigenvalues ascend; take the last two columns, largest first.
  const Eigen::Index d = cov.cols();
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(d, 2);
  basis.col(0) = solver.eigenvectors().col(d - 1);
  if (d > 1) basis.col(1) = solver.eigenvectors().col(d - 2);
  return centred * basis;
}

std::string embedding_svg(const EmbeddingSet& set) {
  if (set.rows.empty()) throw UsageError("no embedding rows to plot");
  const auto n = static_cast<Eigen::Index>(set.rows.size());
  const Eigen::Index groups = set.k + 1;
  Eigen::MatrixXd x(n * groups, set.latent_dim);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = set.rows[static_cast<std::size_t>(r)];
    for (int i = 0; i < set.latent_dim; ++i) x(r, i) = row.real[static_cast<std::size_t>(i)];
    for (int d = 0; d < set.k; ++d) {
      for (int i = 0; i < set.latent_dim; ++i) {
        x((d + 1) * n + r, i) = row.imagined[static_cast<std::size_t>(d)][static_cast<std::size_t>(i)];
      }
    }
  }
  const Eigen::MatrixXd p = pca_2d(x);
  const Frame f = make_frame(p.col(0).minCoeff(), p.col(0).maxCoeff(), p.col(1).minCoeff(), p.col(1).maxCoeff());
  std::string s = header("Latent embeddings (PCA)");
  s += axes(f, "PC1", "PC2");
  std::vector<std::string> labels{"real"};
  for (int d = 1; d <= set.k; ++d) labels.push_back("imagined +" + std::to_string(d));
  for (Eigen::Index g = groups - 1; g >= 0; --g) {
    const char* color = kPalette[g % 8];
    for (Eigen::Index r = 0; r < n; ++r) {
      const Eigen::Index i = g * n + r;
      s += "<circle cx=\"" + fmt("%.2f", f.px(p(i, 0))) + "\" cy=\"" + fmt("%.2f", f.py(p(i, 1))) +
           "\" r=\"2.5\" fill=\"" + color + "\" fill-opacity=\"0.6\"/>\n";
    }
  }
  s += legend(labels);
  s += "</svg>\n";
  return s;
}

}  // namespace mbvd::harness
