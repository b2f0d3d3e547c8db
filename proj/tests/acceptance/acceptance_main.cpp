#include <iostream>

#include "ellfocal/acceptance.hpp"

int main() {
  using namespace ellfocal;
  std::vector<int> all;
  for (const auto& info : acceptance_criteria()) all.push_back(info.id);
  const SuiteResult suite = run_acceptance(all, AcceptanceOptions{}, [](const CriterionResult& r) {
    std::cout << summary_line(r) << std::endl;
  });
  int failed = 0;
  for (const auto& r : suite.results) failed += !r.passed();
  std::cout << (suite.results.size() - static_cast<size_t>(failed)) << " of " << suite.results.size()
            << " criteria passed in " << suite.seconds << " s" << std::endl;
  return failed == 0 ? 0 : 1;
}
