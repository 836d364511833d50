#pragma once

#include <functional>
#include <string_view>

namespace waitflow {

using WarningSink = std::function<void(std::string_view)>;

//! Route library warnings; the default sink writes to stderr. Returns the old sink.
WarningSink set_warning_sink(WarningSink sink);
void warn(std::string_view message);

} // namespace waitflow
