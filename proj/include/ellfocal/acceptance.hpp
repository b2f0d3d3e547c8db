#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ellfocal/ellipsoid.hpp"

namespace ellfocal {

enum class Relation { Less, LessEq, Greater, GreaterEq, Equal };
std::string to_string(Relation r);

struct Measurement {
  std::string name;
  double value = 0.0;
  Relation relation = Relation::Less;
  double threshold = 0.0;
  bool passed = false;
};

Measurement measure(std::string name, double value, Relation relation, double threshold);

struct CriterionResult {
  int id = 0;
  std::string name;
  std::vector<Measurement> measurements;
  double seconds = 0.0;
  std::string detail;
  bool passed() const;
};

struct CriterionInfo {
  int id;
  std::string name;
  std::vector<std::string> groups;
};

/// The fourteen acceptance criteria, in order.
const std::vector<CriterionInfo>& acceptance_criteria();

/// Parses a --only filter: comma-separated ids ("1,4") and group names
/// ("lax", "focal", "rosochatius", "suite"). Empty selects everything.
/// Throws invalid-input for unknown entries.
std::vector<int> select_criteria(const std::string& only);

struct AcceptanceOptions {
  std::uint64_t seed = 42;
  int threads = 1;
};

/// Runs one criterion (1..13). Criterion 14 needs the whole run; use
/// run_acceptance.
CriterionResult run_criterion(int id, const AcceptanceOptions& opts = {});

struct SuiteResult {
  std::vector<CriterionResult> results;
  double seconds = 0.0;
  bool passed() const;
};

/// Runs the selected criteria in order. When 14 is selected it is evaluated
/// last, from the wall clock of the whole run and a repeated determinism
/// probe. `progress` is called after each criterion.
SuiteResult run_acceptance(const std::vector<int>& ids, const AcceptanceOptions& opts = {},
                           void (*progress)(const CriterionResult&) = nullptr);

/// One line: "PASS  4  Lax isospectrality  drift=3.1e-12 < 1e-08 ..."
std::string summary_line(const CriterionResult& r);

// ---------------------------------------------------------------------------
// Spectral checks on an arbitrary ellipsoid (used by lax-verify)

struct LaxVerifyOptions {
  int geodesics = 100;
  double t_max = 50.0;
  int identity_samples = 1000;
  int tangency_samples = 100;
  int interlacing_samples = 1000;
  int variation_samples = 200;
  std::uint64_t seed = 42;
};

/// Isospectral drift and Lax-equation residual along random geodesics.
CriterionResult check_isospectrality(const Ellipsoid& e, const LaxVerifyOptions& opts);
/// Moser's identity at random (x, xi, z).
CriterionResult check_moser_identity(const Ellipsoid& e, const LaxVerifyOptions& opts);
/// Tangency of the confocal quadrics at the Lax eigenvalues and alignment of
/// their contact normals with the eigenvectors.
CriterionResult check_chasles(const Ellipsoid& e, const LaxVerifyOptions& opts);
CriterionResult check_interlacing(const Ellipsoid& e, const LaxVerifyOptions& opts);
/// Eigenvalue first variation against central differences, and the rank of
/// the eigenvalue differentials.
CriterionResult check_first_variation(const Ellipsoid& e, const LaxVerifyOptions& opts);

}  // namespace ellfocal
