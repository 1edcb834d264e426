#include "corrlab/version.hpp"

#include <fftw3.h>

#include <Eigen/Core>
#include <boost/version.hpp>

namespace corrlab {

std::string version() { return CORRLAB_VERSION_STRING; }

std::vector<std::pair<std::string, std::string>> component_versions() {
  return {
      {"corrlab", version()},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
      {"fftw", fftw_version},
      {"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) + "." +
                    std::to_string(BOOST_VERSION % 100)},
      {"compiler", __VERSION__},
  };
}

}  // namespace corrlab
