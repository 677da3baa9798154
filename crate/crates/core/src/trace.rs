/// Optional log of pipeline operation names, in invocation order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OpTrace {
    ops: Option<Vec<String>>,
}

impl OpTrace {
    pub fn recording() -> Self {
        Self { ops: Some(Vec::new()) }
    }

    pub fn off() -> Self {
        Self::default()
    }

    pub fn is_recording(&self) -> bool {
        self.ops.is_some()
    }

    pub fn record(&mut self, op: impl Into<String>) {
        if let Some(ops) = &mut self.ops {
            ops.push(op.into());
        }
    }

    pub fn ops(&self) -> &[String] {
        self.ops.as_deref().unwrap_or(&[])
    }
}
