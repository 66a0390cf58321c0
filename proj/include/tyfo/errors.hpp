#pragma once

#include <stdexcept>
#include <string>

namespace tyfo {

// Base for every failure this library reports. Nothing here ever aborts;
// malformed input surfaces as one of the typed exceptions below.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class MalformedLine : public Error {
  public:
    MalformedLine(int line_no, const std::string& reason)
        : Error("line " + std::to_string(line_no) + ": " + reason), line_no(line_no), reason(reason) {}
    int line_no;
    std::string reason;
};

class CountMismatch : public Error {
  public:
    CountMismatch(const std::string& storm_id, int declared, int actual)
        : Error("storm " + storm_id + ": header declares " + std::to_string(declared) +
                " records, found " + std::to_string(actual)),
          storm_id(storm_id), declared(declared), actual(actual) {}
    std::string storm_id;
    int declared;
    int actual;
};

class NonChronological : public Error {
  public:
    NonChronological(const std::string& storm_id, int line_no)
        : Error("storm " + storm_id + ": timestamps not strictly increasing at line " +
                std::to_string(line_no)),
          storm_id(storm_id), line_no(line_no) {}
    std::string storm_id;
    int line_no;
};

class EmptyTrainingSet : public Error {
  public:
    EmptyTrainingSet() : Error("normalization requires at least one training record") {}
};

class DuplicateKey : public Error {
  public:
    explicit DuplicateKey(const std::string& key) : Error("duplicate key: " + key), key(key) {}
    std::string key;
};

class MalformedPromptFile : public Error {
  public:
    MalformedPromptFile(int line_no, const std::string& reason)
        : Error("prompt cache line " + std::to_string(line_no) + ": " + reason) {}
};

class MalformedEmbeddingFile : public Error {
  public:
    MalformedEmbeddingFile(int line_no, const std::string& reason)
        : Error("embedding cache line " + std::to_string(line_no) + ": " + reason) {}
};

class EmptyText : public Error {
  public:
    EmptyText() : Error("text has no tokens") {}
};

class ShapeMismatch : public Error {
  public:
    ShapeMismatch(const std::string& op, const std::string& shapes)
        : Error(op + ": incompatible shapes " + shapes) {}
};

class NotScalarLoss : public Error {
  public:
    NotScalarLoss() : Error("backward requires a scalar loss tensor") {}
};

class NoTrainingData : public Error {
  public:
    NoTrainingData() : Error("no training windows") {}
};

class NoData : public Error {
  public:
    explicit NoData(const std::string& what) : Error("no data: " + what) {}
};

class DivergedLoss : public Error {
  public:
    explicit DivergedLoss(int epoch)
        : Error("training loss became non-finite at epoch " + std::to_string(epoch)) {}
};

class InsufficientHistory : public Error {
  public:
    InsufficientHistory() : Error("extrapolation needs at least two input records") {}
};

class ConfigError : public Error {
  public:
    explicit ConfigError(const std::string& msg) : Error("config: " + msg) {}
};

class CheckpointError : public Error {
  public:
    explicit CheckpointError(const std::string& msg) : Error("checkpoint: " + msg) {}
};

}  // namespace tyfo
