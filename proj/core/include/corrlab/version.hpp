#pragma once

#include <string>
#include <utility>
#include <vector>

namespace corrlab {

std::string version();

/// (component, version) pairs for the library and its numerical backends.
std::vector<std::pair<std::string, std::string>> component_versions();

}  // namespace corrlab
