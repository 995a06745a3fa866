use std::fmt;

/// Error classes mapped to process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Bad flags or configuration (exit 1).
    Usage,
    /// Missing, malformed or mismatched inputs (exit 2).
    Data,
    /// A checked invariant failed (exit 3).
    Invariant,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub message: String,
}

pub type Outcome<T> = Result<T, Failure>;

impl Failure {
    pub fn usage(m: impl fmt::Display) -> Self {
        Self {
            kind: Kind::Usage,
            message: m.to_string(),
        }
    }

    pub fn data(m: impl fmt::Display) -> Self {
        Self {
            kind: Kind::Data,
            message: m.to_string(),
        }
    }

    pub fn invariant(m: impl fmt::Display) -> Self {
        Self {
            kind: Kind::Invariant,
            message: m.to_string(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind {
            Kind::Usage => 1,
            Kind::Data => 2,
            Kind::Invariant => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<causal_ate::corpus::CorpusError> for Failure {
    fn from(e: causal_ate::corpus::CorpusError) -> Self {
        use causal_ate::corpus::CorpusError as E;
        match e {
            E::InvalidParameter(_) | E::Infeasible(_) => Failure::usage(e),
            _ => Failure::data(e),
        }
    }
}

impl From<causal_ate::models::ModelError> for Failure {
    fn from(e: causal_ate::models::ModelError) -> Self {
        match e {
            causal_ate::models::ModelError::InvalidConfig(_) => Failure::usage(e),
            _ => Failure::data(e),
        }
    }
}

impl From<causal_ate::perturb::PerturbError> for Failure {
    fn from(e: causal_ate::perturb::PerturbError) -> Self {
        match e {
            causal_ate::perturb::PerturbError::InvalidConfig(_) => Failure::usage(e),
            _ => Failure::data(e),
        }
    }
}

impl From<causal_ate::ate::AteError> for Failure {
    fn from(e: causal_ate::ate::AteError) -> Self {
        use causal_ate::ate::AteError as E;
        match e {
            E::InvalidOrder(_) => Failure::usage(e),
            E::Perturb(p) => p.into(),
            _ => Failure::data(e),
        }
    }
}

impl From<causal_ate::report::ReportError> for Failure {
    fn from(e: causal_ate::report::ReportError) -> Self {
        use causal_ate::report::ReportError as E;
        match e {
            E::DiffMismatch { .. } => Failure::invariant(e),
            E::UnknownFormat(_) => Failure::usage(e),
            _ => Failure::data(e),
        }
    }
}
