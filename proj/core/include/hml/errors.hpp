#pragma once

#include <stdexcept>
#include <string>

namespace hml {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Coefficient evaluated outside its domain, or a lower bound violated.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// zeta' = 0 where a direction-dependent basis is requested.
class DegenerateDirectionError : public Error {
 public:
  using Error::Error;
};

class UnsupportedGeneratorError : public Error {
 public:
  using Error::Error;
};

/// Oscillation wavelength shorter than four grid cells on some axis.
class AliasingError : public Error {
 public:
  using Error::Error;
};

/// Arrays, ladders or grids that were expected to agree do not.
class MismatchError : public Error {
 public:
  using Error::Error;
};

/// Not enough samples (time levels, windows) for a requested stencil.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at offset " + std::to_string(position)), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Invalid configuration; path is a JSON-pointer-like location ("/family/epsilons/2").
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class IoError : public Error {
 public:
  IoError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace hml
