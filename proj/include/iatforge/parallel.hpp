#pragma once

namespace iatforge::par {

/// Whether the OpenMP kernels are used; serial reference paths run otherwise.
/// Starts enabled when built with OpenMP unless IATFORGE_SERIAL=1 is set.
bool enabled() noexcept;
void set_enabled(bool value) noexcept;

int max_threads() noexcept;

}  // namespace iatforge::par
