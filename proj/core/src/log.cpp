// SPDX-License-Identifier: Apache-2.0
#include "pimdse/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string_view>

namespace pimdse::log {
namespace {

Level parse_env() {
  const char* raw = std::getenv("PIMDSE_LOG");
  if (raw == nullptr) return Level::Warn;
  const std::string_view v(raw);
  if (v == "error") return Level::Error;
  if (v == "info") return Level::Info;
  if (v == "debug") return Level::Debug;
  return Level::Warn;
}

std::atomic<int>& level_slot() {
  static std::atomic<int> slot{static_cast<int>(parse_env())};
  return slot;
}

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

constexpr std::string_view kNames[] = {"error", "warn", "info", "debug"};

}  // namespace

Level threshold() { return static_cast<Level>(level_slot().load()); }

void set_threshold(Level level) { level_slot().store(static_cast<int>(level)); }

void write(Level level, const std::string& message) {
  std::lock_guard lock(sink_mutex());
  std::cerr << "[pimdse " << kNames[static_cast<int>(level)] << "] " << message
            << '\n';
}

}  // namespace pimdse::log
