#include <waitflow/log.hpp>

#include <iostream>
#include <mutex>

namespace waitflow {
namespace {

std::mutex sink_mutex;

WarningSink& sink() {
    static WarningSink s = [](std::string_view m) { std::cerr << "waitflow: warning: " << m << '\n'; };
    return s;
}

} // namespace

WarningSink set_warning_sink(WarningSink s) {
    std::lock_guard lock(sink_mutex);
    WarningSink old = std::move(sink());
    sink() = std::move(s);
    return old;
}

void warn(std::string_view message) {
    std::lock_guard lock(sink_mutex);
    if (sink()) sink()(message);
}

} // namespace waitflow
