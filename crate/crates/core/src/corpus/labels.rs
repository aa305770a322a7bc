use std::collections::HashSet;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

macro_rules! label_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!(
                        "unknown {} '{}' (expected one of: {})",
                        stringify!($name).to_lowercase(),
                        other,
                        [$($text),+].join(", ")
                    )),
                }
            }
        }
    };
}

label_enum!(Gender {
    Male => "male",
    Female => "female",
});

label_enum!(
    /// The ten job categories of the labeled account pool.
    Occupation {
        Politician => "politician",
        Entertainer => "entertainer",
        Cartoonist => "cartoonist",
        Entrepreneur => "entrepreneur",
        Scholar => "scholar",
        Journalist => "journalist",
        Writer => "writer",
        Musician => "musician",
        Athlete => "athlete",
        ItEngineer => "it_engineer",
    }
);

label_enum!(
    /// Born after 1980 (native) or before (immigrant); `Unknown` when unverified.
    AgeGroup {
        DigitalNative => "digital_native",
        DigitalImmigrant => "digital_immigrant",
        Unknown => "unknown",
    }
);

label_enum!(Role {
    Train => "train",
    Test => "test",
});

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledAccount {
    pub account_id: String,
    pub gender: Gender,
    pub occupation: Occupation,
    pub age_group: AgeGroup,
    pub role: Role,
}

const HEADER: [&str; 5] = ["account_id", "gender", "occupation", "age_group", "role"];

/// Loads the account label CSV (`account_id,gender,occupation,age_group,role`).
pub fn load_labels(path: &Path) -> Result<Vec<LabeledAccount>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_labels(file, path)
}

/// Parses label CSV from any reader; `origin` is used in error messages.
pub fn read_labels<R: Read>(reader: R, origin: &Path) -> Result<Vec<LabeledAccount>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = csv
        .headers()
        .map_err(|e| Error::parse(origin, 1, e.to_string()))?
        .clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(Error::parse(
            origin,
            1,
            format!("expected header '{}'", HEADER.join(",")),
        ));
    }

    let mut seen = HashSet::new();
    let mut accounts = Vec::new();
    for (row, record) in csv.records().enumerate() {
        let row = row + 1;
        let record = record.map_err(|e| {
            let line = e.position().map_or(row + 1, |p| p.line() as usize);
            Error::parse(origin, line, e.to_string())
        })?;
        let line = record.position().map_or(row + 1, |p| p.line() as usize);
        let field = |idx: usize| record.get(idx).unwrap_or_default();
        let invalid = |name: &str, msg: String| Error::parse(origin, line, format!("row {row}, field {name}: {msg}"));

        let account_id = field(0).to_string();
        if account_id.is_empty() {
            return Err(invalid("account_id", "empty".into()));
        }
        let account = LabeledAccount {
            gender: field(1).parse().map_err(|m| invalid("gender", m))?,
            occupation: field(2).parse().map_err(|m| invalid("occupation", m))?,
            age_group: field(3).parse().map_err(|m| invalid("age_group", m))?,
            role: field(4).parse().map_err(|m| invalid("role", m))?,
            account_id,
        };
        if !seen.insert(account.account_id.clone()) {
            return Err(invalid(
                "account_id",
                format!("duplicate account_id '{}'", account.account_id),
            ));
        }
        accounts.push(account);
    }
    Ok(accounts)
}

/// Writes accounts in the format read by [`load_labels`].
pub fn write_labels(path: &Path, accounts: &[LabeledAccount]) -> Result<()> {
    let mut csv = csv::Writer::from_path(path).map_err(|e| Error::Runtime(format!("{}: {e}", path.display())))?;
    for a in accounts {
        csv.serialize(a)
            .map_err(|e| Error::Runtime(format!("{}: {e}", path.display())))?;
    }
    csv.flush().map_err(|e| Error::io(path, e))
}
