#pragma once

#include <string>
#include <string_view>

namespace episodekit {

// Current UTC instant as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_now();

// True when `s` has exactly the utc_now() shape.
bool is_utc_timestamp(std::string_view s);

}  // namespace episodekit
