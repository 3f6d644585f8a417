// Acceptance gate: runs every registered criterion, prints one verdict line
// per check, writes the report CSV, and exits nonzero on any failure.
#include <cstring>
#include <iostream>
#include <string>

#include "quenchlab/acceptance.hpp"

int main(int argc, char **argv) {
    std::string filter;
    std::string out = "acceptance_report.csv";
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--filter") && i + 1 < argc) filter = argv[++i];
        else if (!std::strcmp(argv[i], "--out") && i + 1 < argc) out = argv[++i];
    }
    auto rows = quenchlab::run_acceptance(std::cout, filter, out);
    for (const auto &r : rows)
        if (!r.pass) return 1;
    return rows.empty() ? 1 : 0;
}
