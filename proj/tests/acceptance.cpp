// Acceptance run: every check once at the default settings, one line each.
// Tolerances live with the checks in the repro header; exit status 1 if any fails.

#include <iostream>

#include "relaytune/repro/checks.hpp"

using namespace relaytune;

int main()
{
    ReproOptions opt;
    opt.progress = [](const std::string& m) { std::cerr << "  " << m << '\n'; };
    ReproContext ctx(opt);
    int failed = 0;
    for (const auto& [id, fn] : all_checks()) {
        (void)fn;
        const CheckResult r = run_check(id, ctx);
        failed += !r.pass;
        std::cout << (r.pass ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << ": expected " << r.expected
                  << ", computed " << r.computed << " (tolerance " << r.tolerance << "); " << r.detail << " ["
                  << detail::fixed(r.seconds, 1) << " s]" << std::endl;
    }
    std::cout << all_checks().size() - static_cast<std::size_t>(failed) << "/" << all_checks().size()
              << " criteria pass" << std::endl;
    return failed ? 1 : 0;
}
