//! Diagnostic flags carried alongside numerical results.
//!
//! Critical and degenerate points are data, not failures: every closed-form
//! evaluation returns its value together with the conditions met on the way.

use std::fmt;

use bitflags::bitflags;

bitflags! {
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
    #[serde(transparent)]
    pub struct Flags: u32 {
        /// A paired mode with quasiparticle energy at or below the gapless
        /// threshold was met; its Bogoliubov angle was replaced by 0.
        const GAPLESS = 1 << 0;
        /// The sector ground state is not unique.
        const DEGENERATE = 1 << 1;
        /// The two ground states differ in the occupation of a k = 0 or
        /// k = pi mode and are exactly orthogonal.
        const UNPAIRED_MISMATCH = 1 << 2;
        /// Initial and final couplings coincide.
        const TRIVIAL = 1 << 3;
        /// Energy levels needed to resolve pair states are too close to
        /// separate.
        const UNRESOLVED = 1 << 4;
    }
}

impl Flags {
    const NAMES: [(Flags, &'static str); 5] = [
        (Flags::GAPLESS, "gapless"),
        (Flags::DEGENERATE, "degenerate"),
        (Flags::UNPAIRED_MISMATCH, "unpaired_mismatch"),
        (Flags::TRIVIAL, "trivial"),
        (Flags::UNRESOLVED, "unresolved"),
    ];

    /// Parses the `|`-separated form produced by `Display`.
    pub fn parse(text: &str) -> Option<Flags> {
        let mut out = Flags::empty();
        for part in text.split('|').filter(|p| !p.is_empty()) {
            let (flag, _) = Self::NAMES.iter().find(|(_, name)| *name == part)?;
            out |= *flag;
        }
        Some(out)
    }
}

impl fmt::Display for Flags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (flag, name) in Self::NAMES {
            if self.contains(flag) {
                if !first {
                    f.write_str("|")?;
                }
                f.write_str(name)?;
                first = false;
            }
        }
        Ok(())
    }
}

/// A value together with the diagnostic flags raised while computing it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flagged<T> {
    pub value: T,
    pub flags: Flags,
}

impl<T> Flagged<T> {
    pub fn new(value: T, flags: Flags) -> Self {
        Self { value, flags }
    }

    pub fn clean(value: T) -> Self {
        Self { value, flags: Flags::empty() }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Flagged<U> {
        Flagged { value: f(self.value), flags: self.flags }
    }

    pub fn is_clean(&self) -> bool {
        self.flags.is_empty()
    }
}
