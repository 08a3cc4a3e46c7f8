#pragma once

#include "rdc/monodromy.hpp"
#include "rdc/rdc_model.hpp"
#include "rdc/time_integrator.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rdc {

/// A point (x, u) at which the convection matrix is examined.
struct ConditionSample {
  enum class Source { node, hull, box };
  double x = 0.0;
  Vec u;
  Source source = Source::node;
};

struct HullSampleOptions {
  /// Box sweep over |u| <= box_factor * max sampled |u(x)|.
  double box_factor = 1.1;
  int box_points = 2000;
  uint64_t seed = 7;
  /// Use every stride-th node of each field.
  int node_stride = 1;
};

/// Nodes of the snapshots and hull points, plus a box sweep.
std::vector<ConditionSample> hull_samples(const RDCSystem& sys, const AttractorSample& sample,
                                          const HullSampleOptions& opts = {});

enum class ConditionId {
  assumption35,
  thm43_diagonal,
  thm45_distinct_commuting,
  thm46_symmetric_commuting,
  lemma44_similarity,
  prop51i,
  prop51ii,
  remark52,
  example53,
  example54,
  prop55
};
enum class Verdict { pass, fail, inconclusive };

std::string to_string(ConditionId id);
std::string to_string(Verdict v);

struct ConditionReport {
  ConditionId id = ConditionId::assumption35;
  Verdict verdict = Verdict::inconclusive;
  /// Worst sample; for pairwise checks the second member is in witness_other.
  std::optional<ConditionSample> witness;
  std::optional<ConditionSample> witness_other;
  double violation = 0.0;
  double tolerance = 0.0;
  std::optional<Mat> C;
  std::string note;
};

Json to_json(const ConditionReport& r);

/// max ||D f - f D|| / ||f||; passes automatically for scalar D.
ConditionReport check_assumption35(const RDCSystem& sys, const std::vector<ConditionSample>& samples);

/// Largest off-diagonal entry of f over the samples.
ConditionReport check_diagonal(const RDCSystem& sys, const std::vector<ConditionSample>& samples);

enum class FamilyRequirement { distinct_real_eigs, symmetric };

struct CommutatorOptions {
  /// Random sample pairs examined when not all pairs fit the budget.
  long pair_budget = 10000;
  /// Every sample is also paired with this many fixed anchors.
  int anchors = 8;
  uint64_t seed = 3;
};

/// Pairwise commutation of f over the samples plus the eigen-structure
/// requirement at every sample.
ConditionReport check_commuting_family(const RDCSystem& sys,
                                       const std::vector<ConditionSample>& samples,
                                       FamilyRequirement req, const CommutatorOptions& opts = {});

struct EigenbasisResult {
  std::optional<Mat> C;
  /// Largest relative off-diagonal (diagonal route) or asymmetry (similarity
  /// route) of C^{-1} M C over the family.
  double validation = 0.0;
  int attempts = 0;
  std::string note;
};

enum class EigenbasisRoute { diagonal, symmetric_similarity };

/// Eigenvectors of a random combination of the family, columns normalised
/// with the first nonzero entry positive. Retries up to 3 times when the
/// validation of C^{-1} M C fails.
EigenbasisResult build_common_eigenbasis(const std::vector<Mat>& family,
                                         EigenbasisRoute route = EigenbasisRoute::diagonal,
                                         uint64_t seed = 5);

/// D^{-1} f = C H C^{-1} with H symmetric and pairwise commuting.
ConditionReport check_similarity(const RDCSystem& sys, const std::vector<ConditionSample>& samples,
                                 const CommutatorOptions& opts = {});

enum class Prop51Variant { distinct, symmetric };

/// Structure test on Q alone: distinct real eigenvalues (the discriminant
/// (q11 - q22)^2 + 4 q12 q21 > 0 for m = 2) or symmetry.
ConditionReport check_prop51_matrix(const Mat& Q, Prop51Variant variant);

/// Requires a system of the form f = f1(x,u) Q (PreconditionError otherwise).
/// The distinct variant also needs min |f1| > 0 over the samples.
ConditionReport check_prop51(const RDCSystem& sys, const std::vector<ConditionSample>& samples,
                             Prop51Variant variant);

/// Discriminant of a 2x2 Q; inconclusive for other sizes.
ConditionReport check_remark52(const Mat& Q);

/// f of the form [[a, b], [b, a]] at every sample.
ConditionReport check_example53(const RDCSystem& sys, const std::vector<ConditionSample>& samples);

/// f commutes with the fixed Q at every sample and Q has distinct real eigenvalues.
ConditionReport check_example54(const RDCSystem& sys, const std::vector<ConditionSample>& samples);

/// f = Q(x) with Q^t(x) = Q(1-x) on the nodes x_i = i/n_nodes.
ConditionReport check_prop55(const RDCSystem& sys, const std::vector<ConditionSample>& samples,
                             int n_nodes = 256);
/// The same reflection test for a given x-only matrix function.
ConditionReport check_prop55(const std::function<Mat(double)>& Q, int n_nodes = 256);

struct CertifyConfig {
  int K = 32;
  double alpha = 0.8;
  double theta = 0.5;
  int n_quad = 16;
  /// Attractor pairs sent through the monodromy route.
  int max_pairs = 8;
  HullSampleOptions hull;
  CommutatorOptions commutator;
  CauchyOptions cauchy;
};

enum class Stage { structure, assumption35, commuting_family, monodromy_pd, spectrum_gap, none };
std::string to_string(Stage s);

struct PairCertificate {
  int a = 0, b = 0;
  MonodromyCertificate cert;
};

struct CertificationReport {
  std::string system;
  std::vector<ConditionReport> conditions;
  std::vector<PairCertificate> certificates;
  std::optional<SpectrumReport> spectrum;
  /// certified, not_certified or inconclusive.
  std::string verdict;
  std::string route;
  Stage failing_stage = Stage::none;
  std::string remark;
  int n_samples = 0;

  bool certified() const { return verdict == "certified"; }
};

/// Combines structural reports, monodromy certificates and the spectrum into
/// the overall verdict.
void final_verdict(CertificationReport& report, const DiffusionMatrix& D);

/// Full pipeline on an attractor sample: conditions, B per pair, monodromy
/// certificates, lattice, gap test and final verdict.
CertificationReport certify(const RDCSystem& sys, const AttractorSample& sample,
                            const CertifyConfig& config = {});

Json to_json(const CertificationReport& r);

}  // namespace rdc
