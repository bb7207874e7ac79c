#include "modnas/errors.hpp"

#include <atomic>
#include <iostream>

namespace modnas {

namespace {
std::atomic<bool> g_warnings{true};
}

void check_size(std::size_t actual, std::size_t expected, const char* what) {
  if (actual != expected) {
    throw ShapeError(std::string(what) + ": expected size " + std::to_string(expected) + ", got " +
                     std::to_string(actual));
  }
}

void log_warning(const std::string& message) {
  if (g_warnings.load(std::memory_order_relaxed)) std::cerr << "[modnas] warning: " << message << '\n';
}

void set_warnings_enabled(bool enabled) { g_warnings.store(enabled); }
bool warnings_enabled() { return g_warnings.load(); }

}  // namespace modnas
