#include <iostream>

#include "nlmin/verify.hpp"

int main() {
  const auto results = nlmin::run_verify({}, std::cout);
  int failed = 0;
  for (const auto& r : results) failed += r.pass ? 0 : 1;
  std::cout << results.size() - failed << "/" << results.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
