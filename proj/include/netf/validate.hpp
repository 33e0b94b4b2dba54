#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace netf {

struct ValidationCheck {
  std::string name;
  bool passed = false;
  double measured = 0.0;   // worst observed error
  double tolerance = 0.0;
  double seconds = 0.0;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool all_passed() const;
};

// Full numerical oracle battery: vectorisation identities, closed-form
// Procrustes agreement with the trust-region solver, implicit-gradient
// finite-difference checks, the constraint-gradient Gram determinant, and
// the collapse fixed point. Prints one line per check with the measured
// error, tolerance, and wall time.
ValidationReport validate_suite(std::ostream& out);

}  // namespace netf
