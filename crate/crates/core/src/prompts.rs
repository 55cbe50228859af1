//! Prompt template texts.

use crate::snippet::Language;

pub const PRESENTATION_GUIDE: &str = "Reply with to-the-point answer, no elaboration.";

pub const INFER_JAVA: &str = "Do not check for any import statements in the code. Only give correct imports by not using wildcard imports. Please note that you need to pay close attention and your response should be specific and accurate. Avoid repetition and must not generate wrong and nonexistent imports:";

pub const INFER_PYTHON: &str = "Only give correct import statements for the attached code. Please note that you need to pay close attention and your response should be specific and accurate. Avoid repetition and must not generate wrong imports:";

pub const FIX_JAVA: &str = "Now fix the error by focusing on fixing the import statements by not using wildcard imports and must not modify code body which means do not change anything inside the class. So, it can be successfully compiled and reply with full code.";

pub const FIX_PYTHON: &str = "Now fix the error by focusing on fixing the import statements. So, it can be run successfully and reply with full code.";

pub const FIX_SEE_CODE: &str = "See the code below:";
pub const FIX_GOT_ERROR: &str = "For the above code I got the below error log:";

pub fn infer_instruction(language: Language) -> &'static str {
    match language {
        Language::Java => INFER_JAVA,
        Language::Python => INFER_PYTHON,
    }
}

pub fn fix_instruction(language: Language) -> &'static str {
    match language {
        Language::Java => FIX_JAVA,
        Language::Python => FIX_PYTHON,
    }
}

/// Opening line of a follow-up fixing message.
pub fn follow_up_lead(attempt_number: u32) -> String {
    format!("You gave the above imports fix in your attempt {attempt_number}. But compiler gave this error:")
}
