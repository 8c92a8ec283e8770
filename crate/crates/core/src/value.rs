//! Scalar values shared by protocol literals, database cells and assignable sets.

use std::cmp::Ordering;
use std::fmt;

use chrono::{Datelike, NaiveDate};
use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Declared type of a database column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    Int,
    Decimal,
    Str,
    Date,
}

impl Tag {
    pub fn as_str(self) -> &'static str {
        match self {
            Tag::Int => "int",
            Tag::Decimal => "decimal",
            Tag::Str => "str",
            Tag::Date => "date",
        }
    }

    /// Parses a raw CSV cell. The empty string is `Null`.
    pub fn parse_cell(self, raw: &str) -> Result<Value, String> {
        if raw.is_empty() {
            return Ok(Value::Null);
        }
        match self {
            Tag::Int => raw
                .trim()
                .parse::<i64>()
                .map(Value::Int)
                .map_err(|e| format!("invalid int {raw:?}: {e}")),
            Tag::Decimal => raw
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|f| f.is_finite())
                .map(Value::decimal)
                .ok_or_else(|| format!("invalid decimal {raw:?}")),
            Tag::Str => Ok(Value::Str(raw.to_string())),
            Tag::Date => NaiveDate::parse_from_str(raw.trim(), "%Y-%m-%d")
                .map(Value::Date)
                .map_err(|e| format!("invalid date {raw:?}: {e}")),
        }
    }

    /// Converts a JSON scalar into a value of this tag.
    pub fn from_json(self, json: &serde_json::Value) -> Result<Value, String> {
        use serde_json::Value as J;
        match (self, json) {
            (_, J::Null) => Ok(Value::Null),
            (Tag::Int, J::Number(n)) => n
                .as_i64()
                .map(Value::Int)
                .ok_or_else(|| format!("expected int, found {n}")),
            (Tag::Decimal, J::Number(n)) => n
                .as_f64()
                .map(Value::decimal)
                .ok_or_else(|| format!("expected decimal, found {n}")),
            (Tag::Str, J::String(s)) => Ok(Value::Str(s.clone())),
            (Tag::Date, J::String(s)) => self.parse_cell(s),
            (tag, other) => Err(format!("expected {}, found {other}", tag.as_str())),
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Tagged scalar.
///
/// The derived ordering and equality are structural (`Null == Null`); they
/// back set semantics for rows. Query semantics go through [`Value::joins_with`]
/// and [`Value::compare`] instead.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Null,
    Int(i64),
    Decimal(OrderedFloat<f64>),
    Str(String),
    Date(NaiveDate),
}

/// Comparison operator of a condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [
        CmpOp::Eq,
        CmpOp::Ne,
        CmpOp::Lt,
        CmpOp::Gt,
        CmpOp::Le,
        CmpOp::Ge,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
        }
    }

    /// The operator of the textual negation: `=` and `!=` swap, `<` pairs with `>=`.
    pub fn negated(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Le => CmpOp::Gt,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("cannot compare {left} with {right}")]
    IncomparableTags {
        left: &'static str,
        right: &'static str,
    },
    #[error("field access .{field} on non-date value {value}")]
    NotADate { field: &'static str, value: String },
    #[error("unknown column or variable `{0}`")]
    UnknownColumn(String),
}

impl Value {
    pub fn decimal(f: f64) -> Value {
        Value::Decimal(OrderedFloat(f))
    }

    pub fn date(year: i32, month: u32, day: u32) -> Option<Value> {
        NaiveDate::from_ymd_opt(year, month, day).map(Value::Date)
    }

    pub fn str(s: impl Into<String>) -> Value {
        Value::Str(s.into())
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// `None` for `Null`.
    pub fn tag(&self) -> Option<Tag> {
        match self {
            Value::Null => None,
            Value::Int(_) => Some(Tag::Int),
            Value::Decimal(_) => Some(Tag::Decimal),
            Value::Str(_) => Some(Tag::Str),
            Value::Date(_) => Some(Tag::Date),
        }
    }

    pub fn type_name(&self) -> &'static str {
        self.tag().map(Tag::as_str).unwrap_or("null")
    }

    /// Equality used for join columns and for equating repeated variables:
    /// `Null` matches nothing, not even another `Null`.
    pub fn joins_with(&self, other: &Value) -> bool {
        !self.is_null() && !other.is_null() && self == other
    }

    /// Two-valued comparison.
    ///
    /// `=` holds iff both sides are `Null` or both are equal non-null values,
    /// and `!=` is its complement. Ordering operators are false whenever
    /// either side is `Null`. Ints and decimals compare numerically; any other
    /// tag mix is an error.
    pub fn compare(&self, op: CmpOp, other: &Value) -> Result<bool, EvalError> {
        if self.is_null() || other.is_null() {
            let both = self.is_null() && other.is_null();
            return Ok(match op {
                CmpOp::Eq => both,
                CmpOp::Ne => !both,
                _ => false,
            });
        }
        let ord = self.order(other)?;
        Ok(match op {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
        })
    }

    fn order(&self, other: &Value) -> Result<Ordering, EvalError> {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => Ok(a.cmp(b)),
            (Value::Decimal(a), Value::Decimal(b)) => Ok(a.cmp(b)),
            (Value::Int(a), Value::Decimal(b)) => Ok(OrderedFloat(*a as f64).cmp(b)),
            (Value::Decimal(a), Value::Int(b)) => Ok(a.cmp(&OrderedFloat(*b as f64))),
            (Value::Str(a), Value::Str(b)) => Ok(a.cmp(b)),
            (Value::Date(a), Value::Date(b)) => Ok(a.cmp(b)),
            _ => Err(EvalError::IncomparableTags {
                left: self.type_name(),
                right: other.type_name(),
            }),
        }
    }

    /// Component of a date; `Null` passes through.
    pub fn date_field(&self, field: DateField) -> Result<Value, EvalError> {
        match self {
            Value::Null => Ok(Value::Null),
            Value::Date(d) => Ok(Value::Int(match field {
                DateField::Year => d.year() as i64,
                DateField::Month => d.month() as i64,
                DateField::Day => d.day() as i64,
            })),
            other => Err(EvalError::NotADate {
                field: field.as_str(),
                value: other.to_string(),
            }),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Null => serde_json::Value::Null,
            Value::Int(i) => (*i).into(),
            Value::Decimal(f) => serde_json::Number::from_f64(f.0)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            Value::Str(s) => s.clone().into(),
            Value::Date(d) => d.format("%Y-%m-%d").to_string().into(),
        }
    }

    /// Renders the value as a protocol literal that lexes back to itself.
    pub fn to_literal(&self) -> String {
        match self {
            Value::Null => "null".to_string(),
            Value::Int(i) => i.to_string(),
            Value::Decimal(f) => {
                let s = f.0.to_string();
                if s.contains('.') {
                    s
                } else {
                    format!("{s}.0")
                }
            }
            Value::Str(s) => format!("'{}'", s.replace('\'', "''")),
            Value::Date(d) => d.format("%Y-%m-%d").to_string(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_literal())
    }
}

impl Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DateField {
    Year,
    Month,
    Day,
}

impl DateField {
    pub fn parse(s: &str) -> Option<DateField> {
        match s {
            "year" => Some(DateField::Year),
            "month" => Some(DateField::Month),
            "day" => Some(DateField::Day),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DateField::Year => "year",
            DateField::Month => "month",
            DateField::Day => "day",
        }
    }
}
