#pragma once

#include <stdexcept>
#include <string>

namespace leglab {

// Every failure raised by the library derives from LabError so the runner can
// turn it into a machine-readable error record.
class LabError : public std::runtime_error {
 public:
  LabError(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class DomainError : public LabError {
 public:
  explicit DomainError(const std::string& what) : LabError("DomainError", what) {}
};

class PrecisionError : public LabError {
 public:
  explicit PrecisionError(const std::string& what) : LabError("PrecisionError", what) {}
};

class IndexError : public LabError {
 public:
  explicit IndexError(const std::string& what) : LabError("IndexError", what) {}
};

class GridTooCoarse : public LabError {
 public:
  explicit GridTooCoarse(const std::string& what) : LabError("GridTooCoarse", what) {}
};

class ConfigError : public LabError {
 public:
  explicit ConfigError(const std::string& what) : LabError("ConfigError", what) {}
};

class MeshInvalid : public LabError {
 public:
  explicit MeshInvalid(const std::string& what) : LabError("MeshInvalid", what) {}
};

class UnsupportedPiece : public LabError {
 public:
  explicit UnsupportedPiece(const std::string& what) : LabError("UnsupportedPiece", what) {}
};

}  // namespace leglab
