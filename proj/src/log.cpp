#include "awareplan/log.hpp"

#include <iostream>
#include <mutex>

namespace awareplan::log {

namespace {

std::mutex g_mutex;

void default_sink(Level level, std::string_view message) {
    if (level < Level::Warn) {
        return;
    }
    std::cerr << (level == Level::Warn ? "[warn] " : "[error] ") << message << '\n';
}

Sink& current() {
    static Sink sink = default_sink;
    return sink;
}

}  // namespace

void set_sink(Sink sink) {
    std::lock_guard lock(g_mutex);
    current() = std::move(sink);
}

void reset_sink() { set_sink(default_sink); }

void write(Level level, std::string_view message) {
    std::lock_guard lock(g_mutex);
    current()(level, message);
}

}  // namespace awareplan::log
