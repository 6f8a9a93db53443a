#ifndef TERRAIN_LOOP_ERRORS_HPP
#define TERRAIN_LOOP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace terrain_loop {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyCloudError : Error {
  EmptyCloudError() : Error("point cloud contains no valid points") {}
  explicit EmptyCloudError(const std::string& what) : Error(what) {}
};

struct ParseError : Error {
  ParseError(const std::string& what, std::size_t line, std::size_t byte_offset)
      : Error(what + " (line " + std::to_string(line) + ", byte " +
              std::to_string(byte_offset) + ")"),
        line(line),
        byte_offset(byte_offset) {}
  std::size_t line;
  std::size_t byte_offset;
};

struct NonFiniteValueError : Error {
  using Error::Error;
};

struct DegenerateDataError : Error {
  using Error::Error;
};

struct FactorizationFailure : Error {
  using Error::Error;
};

struct RasterTooLargeError : Error {
  using Error::Error;
};

struct DegenerateSampleError : Error {
  using Error::Error;
};

struct MissingPoseError : Error {
  using Error::Error;
};

struct UnlabeledPairError : Error {
  using Error::Error;
};

struct DuplicateIdError : Error {
  using Error::Error;
};

struct UnknownIdError : Error {
  using Error::Error;
};

struct NoOverlapError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace terrain_loop

#endif
