#pragma once

#include <string>
#include <utility>

#include "dexperts/core.hpp"

// Runs f and returns the SimError code it throws, or "" if it returns.
template <typename F>
std::string error_code(F&& f) {
    try {
        std::forward<F>(f)();
    } catch (const dexperts::SimError& e) {
        return e.code();
    }
    return "";
}
