//! CSV rows with a fixed number format.

use std::io::{self, Write};

/// Significant digits for every floating-point field.
pub const SIG_DIGITS: usize = 12;

/// `x` rounded to [`SIG_DIGITS`] significant digits, shortest form.
/// Plain notation for exponents in `-5..12`, scientific otherwise.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub trait Field {
    fn field(&self) -> String;
}

impl Field for f64 {
    fn field(&self) -> String {
        fmt_num(*self)
    }
}

/// Missing values are empty fields.
impl Field for Option<f64> {
    fn field(&self) -> String {
        self.map(fmt_num).unwrap_or_default()
    }
}

macro_rules! display_field {
    ($($t:ty),*) => {$(
        impl Field for $t {
            fn field(&self) -> String {
                self.to_string()
            }
        }
    )*};
}

display_field!(bool, i32, u32, u64, usize, &str, String, expcoding::Scheme);

/// Writes a header on creation and checks the width of every row.
pub struct Table<'a> {
    out: &'a mut dyn Write,
    width: usize,
}

impl<'a> Table<'a> {
    pub fn new(out: &'a mut dyn Write, header: &[&str]) -> io::Result<Self> {
        writeln!(out, "{}", header.join(","))?;
        Ok(Table {
            out,
            width: header.len(),
        })
    }

    pub fn row(&mut self, fields: &[&dyn Field]) -> io::Result<()> {
        assert_eq!(fields.len(), self.width, "row width differs from header");
        let line: Vec<String> = fields.iter().map(|f| f.field()).collect();
        writeln!(self.out, "{}", line.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        let cases = [
            (0.0, "0"),
            (-0.0, "0"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (1.0 / 3.0, "0.333333333333"),
            (2.0 / 3.0, "0.666666666667"),
            (0.00390625, "0.00390625"),
            (1e-5, "0.00001"),
            (1.2345e-6, "1.2345e-6"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e12"),
            (9.999999999999999, "10"),
            (f64::INFINITY, "inf"),
            (f64::NAN, "nan"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_num(x), want, "{x:e}");
        }
    }

    #[test]
    fn rows_and_fields() {
        let mut buf = Vec::new();
        let mut t = Table::new(&mut buf, &["a", "b", "c", "d"]).unwrap();
        t.row(&[&1.5, &None::<f64>, &true, &"x"]).unwrap();
        t.row(&[&Some(0.25), &Some(2.0), &false, &7u32]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "a,b,c,d\n1.5,,true,x\n0.25,2,false,7\n"
        );
    }

    #[test]
    #[should_panic(expected = "row width")]
    fn width_is_checked() {
        let mut buf = Vec::new();
        let mut t = Table::new(&mut buf, &["a"]).unwrap();
        t.row(&[&1.0, &2.0]).unwrap();
    }
}
