#pragma once

#include <string>

namespace iatforge {

enum class Label { benign, malware };

inline const char* label_name(Label label) { return label == Label::malware ? "malware" : "benign"; }

/// Verdict wording used in scan reports.
inline const char* verdict_name(Label label) { return label == Label::malware ? "malicious" : "benign"; }

}  // namespace iatforge
