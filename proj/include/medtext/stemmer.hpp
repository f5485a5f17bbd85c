#pragma once

#include <string>
#include <string_view>

namespace medtext {

/// Porter stemming algorithm (1980), standard variant. Expects a lowercase
/// token; words shorter than three characters and words containing anything
/// outside a-z are returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace medtext
