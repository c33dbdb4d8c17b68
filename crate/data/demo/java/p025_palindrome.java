import java.util.Scanner;

public class Main {
    private static boolean isPalindrome(String s) {
        int i = 0;
        int j = s.length() - 1;
        while (i < j) {
            if (s.charAt(i) != s.charAt(j)) {
                return false;
            }
            i++;
            j--;
        }
        return true;
    }

    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        String word = sc.next();
        if (isPalindrome(word)) {
            System.out.println("Yes");
        } else {
            System.out.println("No");
        }
    }
}
