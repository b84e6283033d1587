#pragma once

#include <stdexcept>
#include <string>

namespace xmodal {

// Error categories, mirrored one-to-one by the C API status codes.
enum class ErrorKind {
    io,             // unreadable stream, missing file
    corrupt_input,  // too many malformed lines, broken artifact
    config,         // bad parameters, missing modality, unknown label
    contract,       // a detector violated its declared contract
    runtime,        // everything else
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace xmodal
