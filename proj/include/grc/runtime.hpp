// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace grc {

/// Keeps freed tensor storage in the process heap instead of returning it to
/// the kernel after every step. No effect outside glibc.
void tune_allocator();

}  // namespace grc
