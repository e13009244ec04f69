#include "saflow/prototypes.hpp"

#include <stdexcept>

#include "saflow/selfassign.hpp"

namespace saflow::prototypes {

Eigen::MatrixXd recover_prototypes(const Eigen::MatrixXd& W,
                                   const Eigen::MatrixXd& F) {
  if (W.rows() != F.rows()) throw std::invalid_argument("dimension mismatch");
  Eigen::VectorXd mass = selfassign::cluster_mass(W);
  if (!(mass.array() > 0.0).all())
    throw std::domain_error("every column needs positive mass");
  return mass.cwiseInverse().asDiagonal() * (W.transpose() * F);
}

ScatterReport scatter_report(const Eigen::MatrixXd& F,
                             const Eigen::MatrixXd& W) {
  if (W.rows() != F.rows()) throw std::invalid_argument("dimension mismatch");
  const Eigen::Index n = F.rows();
  if (n < 1) throw std::invalid_argument("empty feature set");
  const double inv_n = 1.0 / static_cast<double>(n);

  Eigen::MatrixXd A0 = selfassign::self_assignment(W, 0.0);
  Eigen::RowVectorXd colsum = F.colwise().sum();

  ScatterReport rep;
  Eigen::MatrixXd FtF = F.transpose() * F;
  Eigen::MatrixXd FtA0F = F.transpose() * (A0 * F);
  Eigen::MatrixXd mean_term = inv_n * colsum.transpose() * colsum;
  rep.total = inv_n * (FtF - mean_term);
  rep.within = inv_n * (FtF - FtA0F);
  rep.between = inv_n * (FtA0F - mean_term);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(rep.within);
  if (eig.info() == Eigen::Success && eig.eigenvalues().minCoeff() > 1e-10) {
    rep.separability = rep.within.ldlt().solve(rep.between).trace();
    rep.separability_valid = true;
  }
  return rep;
}

}  // namespace saflow::prototypes
