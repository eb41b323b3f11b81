#pragma once

#include <cstdio>
#include <string>

namespace eepi::acceptance
{

enum class Status
{
    Pass,
    Fail,
    Skip,
};

struct Outcome
{
    Status status;
    std::string detail;
};

inline std::string fmt(double v, int digits = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

// Fixture-based criteria 1-9; each reports SKIP when its data files are absent.
Outcome measles_basic();
Outcome measles_poisson();
Outcome measles_vaccination();
Outcome measles_neighbourhood();
Outcome hagelloch_fit();
Outcome imd_endemic();
Outcome imd_kernels();
Outcome imd_r0();
Outcome measles_scores();

}  // namespace eepi::acceptance
