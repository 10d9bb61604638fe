/// Role of a recorded channel, derived from its name prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ChannelGroup {
    Output,
    Reference,
    Command,
    Error,
}

impl ChannelGroup {
    pub fn of(name: &str) -> Self {
        if name.starts_with("ref:") {
            ChannelGroup::Reference
        } else if name.starts_with("u:") || name.starts_with("cmd:") {
            ChannelGroup::Command
        } else if name.starts_with("err:") {
            ChannelGroup::Error
        } else {
            ChannelGroup::Output
        }
    }
}

/// Uniformly sampled named signals sharing one time grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceSet {
    time: Vec<f64>,
    names: Vec<String>,
    data: Vec<Vec<f64>>,
}

impl TraceSet {
    pub fn new(names: Vec<String>) -> Self {
        let data = vec![Vec::new(); names.len()];
        Self {
            time: Vec::new(),
            names,
            data,
        }
    }

    /// Builds a trace set from columns; every column must match `time` in length.
    pub fn from_columns(time: Vec<f64>, columns: Vec<(String, Vec<f64>)>) -> Option<Self> {
        if columns.iter().any(|(_, c)| c.len() != time.len()) {
            return None;
        }
        let (names, data) = columns.into_iter().unzip();
        Some(Self { time, names, data })
    }

    pub fn push_row(&mut self, t: f64, row: &[f64]) {
        assert_eq!(row.len(), self.names.len(), "row width");
        self.time.push(t);
        for (col, v) in self.data.iter_mut().zip(row) {
            col.push(*v);
        }
    }

    pub fn time(&self) -> &[f64] {
        &self.time
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.data[i].as_slice())
    }

    pub fn channels(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.names.iter().map(String::as_str).zip(self.data.iter().map(Vec::as_slice))
    }

    /// Sample of `name` nearest to time `t`.
    pub fn value_at(&self, name: &str, t: f64) -> Option<f64> {
        let ch = self.channel(name)?;
        let k = self.time.partition_point(|x| *x < t);
        let k = match k {
            0 => 0,
            k if k >= self.time.len() => self.time.len() - 1,
            k if (self.time[k] - t).abs() < (t - self.time[k - 1]).abs() => k,
            k => k - 1,
        };
        ch.get(k).copied()
    }
}
