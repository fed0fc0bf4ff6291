#pragma once

#include <functional>
#include <string_view>

namespace awareplan::log {

enum class Level { Debug, Info, Warn, Error };

using Sink = std::function<void(Level, std::string_view)>;

// Replaces the process-wide sink; the default writes Warn and above to stderr.
void set_sink(Sink sink);
void reset_sink();

void write(Level level, std::string_view message);

inline void warn(std::string_view message) { write(Level::Warn, message); }
inline void info(std::string_view message) { write(Level::Info, message); }

}  // namespace awareplan::log
