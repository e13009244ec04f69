#pragma once

#include <Eigen/Dense>

// Latent prototype recovery and the scatter-matrix decomposition induced by
// a soft assignment.
namespace saflow::prototypes {

// f*_j = (C(W)^{-1} W^T F) row j: mass-weighted feature means, c x d.
// Every column of W needs positive mass.
Eigen::MatrixXd recover_prototypes(const Eigen::MatrixXd& W,
                                   const Eigen::MatrixXd& F);

// S_t = (1/n) F^T (I - 11^T/n) F splits exactly into
// S_w = (1/n) F^T (I - A_0(W)) F and S_b = (1/n) F^T (A_0(W) - 11^T/n) F.
// separability = tr(S_w^{-1} S_b) is only reported when S_w has smallest
// eigenvalue > 1e-10 (flag separability_valid); no silent regularization.
struct ScatterReport {
  Eigen::MatrixXd total, within, between;
  double separability = 0.0;
  bool separability_valid = false;
};

ScatterReport scatter_report(const Eigen::MatrixXd& F,
                             const Eigen::MatrixXd& W);

}  // namespace saflow::prototypes
